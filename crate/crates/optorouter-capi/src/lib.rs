//! C ABI for the router engine.
//!
//! Conventions:
//! - Every object crossing the boundary is an opaque handle created by an
//!   `opto_*` constructor and released exactly once by its matching
//!   `opto_*_free`. Freeing null is a no-op; double-free is undefined.
//! - Functions that can fail return an [`OptoStatus`]; `OPTO_STATUS_OK` is 0.
//!   On failure, [`opto_last_error`] returns a message for the calling
//!   thread, valid until the thread's next failing call.
//! - Scalar getters return the value directly, with NaN (or 0 for counts)
//!   on a null handle, so chained reads stay branch-free on the C side.
//! - All quantities are SI: rad/s for frequencies, meters for displacements,
//!   kelvin for temperatures.
//!
//! Unknown config keys are accepted silently here; use the CLI if you want
//! them reported.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use optorouter::cli_io::{load_config, parse_config};
use optorouter::params::derive_parameters;
use optorouter::response::{compute_spectrum, FrequencyGrid, ResponseError, ResponseMode};
use optorouter::routing::find_channels;
use optorouter::steady_state::solve_operating;
use optorouter::{ChannelKind, RoutingReport, Spectrum, SteadyState, SystemParams};

/// Opaque parameter-set handle (validated SI parameters).
pub struct OptoParams(SystemParams);

/// Opaque steady-state handle (one operating point).
pub struct OptoSteadyState(SteadyState);

/// Opaque spectrum handle (probabilities and noise on a frequency grid).
pub struct OptoSpectrum(Spectrum);

/// Opaque routing-report handle (detected channels and the splitting).
pub struct OptoRouting(RoutingReport);

/// Result code for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptoStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was malformed (non-UTF-8 path, bad grid, negative
    /// temperature, undersized buffer, out-of-range index).
    InvalidArgument = 2,
    /// The config file could not be read, parsed, or validated.
    Config = 3,
    /// The solver failed (no stable branch, degenerate stiffness, singular
    /// response).
    Physics = 4,
    /// Channel detection failed (featureless spectrum, grid too coarse or
    /// too narrow).
    Routing = 5,
    /// An internal panic was caught at the boundary; the library state is
    /// still usable but the result is lost.
    Panic = 6,
}

/// Response evaluation mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptoMode {
    /// Ground-truth dense linear solve per frequency (default).
    Oracle = 0,
    /// Independently derived closed form.
    Rederived = 1,
    /// Closed form transcribed verbatim from the published expressions.
    PaperVerbatim = 2,
}

/// Which port a detected channel feeds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptoChannelKind {
    /// Transmission through the cavity to the right port.
    TransmitRight = 0,
    /// Reflection to the left port, lower sideband of the split pair.
    ReflectLeftLower = 1,
    /// Reflection to the left port, upper sideband.
    ReflectLeftUpper = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: OptoStatus, message: impl std::fmt::Display) -> OptoStatus {
    let text = CString::new(message.to_string())
        .unwrap_or_else(|_| CString::new("error message contained an interior NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

/// Run `f` with panics caught, so an internal bug cannot unwind into C.
fn guarded(f: impl FnOnce() -> OptoStatus) -> OptoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(OptoStatus::Panic, "internal panic caught at the C boundary"),
    }
}

/// Write a freshly boxed value through an out-pointer.
///
/// # Safety
/// `out` must be a valid, writable pointer.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> OptoStatus {
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    OptoStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opto_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message from the calling thread's most recent failure, or null if the
/// thread has never failed. The pointer stays valid until this thread's next
/// failing call.
#[no_mangle]
pub extern "C" fn opto_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |text| text.as_ptr())
    })
}

fn params_from_map(
    map: Result<optorouter::params::ConfigMap, optorouter::cli_io::ConfigError>,
    out: *mut *mut OptoParams,
) -> OptoStatus {
    let map = match map {
        Ok(map) => map,
        Err(e) => return fail(OptoStatus::Config, e),
    };
    match derive_parameters(&map) {
        Ok((params, _warnings)) => unsafe { emit(out, OptoParams(params)) },
        Err(e) => fail(OptoStatus::Config, e),
    }
}

/// Load and validate a parameter set from a `key = value` config file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opto_params_load(
    path: *const c_char,
    out: *mut *mut OptoParams,
) -> OptoStatus {
    if path.is_null() || out.is_null() {
        return fail(OptoStatus::NullArgument, "opto_params_load: null argument");
    }
    guarded(|| {
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail(OptoStatus::InvalidArgument, "config path is not UTF-8"),
        };
        params_from_map(load_config(Path::new(path)), out)
    })
}

/// Parse and validate a parameter set from config text held in memory.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opto_params_parse(
    text: *const c_char,
    out: *mut *mut OptoParams,
) -> OptoStatus {
    if text.is_null() || out.is_null() {
        return fail(OptoStatus::NullArgument, "opto_params_parse: null argument");
    }
    guarded(|| {
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail(OptoStatus::InvalidArgument, "config text is not UTF-8"),
        };
        params_from_map(parse_config(text), out)
    })
}

/// Deep-copy a parameter set (cheap; use before mutating for a sweep).
///
/// # Safety
/// `params` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opto_params_clone(
    params: *const OptoParams,
    out: *mut *mut OptoParams,
) -> OptoStatus {
    if params.is_null() || out.is_null() {
        return fail(OptoStatus::NullArgument, "opto_params_clone: null argument");
    }
    unsafe { emit(out, OptoParams((*params).0.clone())) }
}

/// Overwrite the Coulomb coupling strength lambda (rad/s per m^2).
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn opto_params_set_coulomb_lambda(
    params: *mut OptoParams,
    lambda: f64,
) -> OptoStatus {
    if params.is_null() {
        return fail(
            OptoStatus::NullArgument,
            "opto_params_set_coulomb_lambda: null handle",
        );
    }
    if !lambda.is_finite() {
        return fail(
            OptoStatus::InvalidArgument,
            format!("coulomb lambda must be finite, got {lambda}"),
        );
    }
    unsafe { (*params).0.coulomb_lambda = lambda };
    OptoStatus::Ok
}

/// Overwrite the bath temperature (K, non-negative).
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn opto_params_set_temperature(
    params: *mut OptoParams,
    kelvin: f64,
) -> OptoStatus {
    if params.is_null() {
        return fail(
            OptoStatus::NullArgument,
            "opto_params_set_temperature: null handle",
        );
    }
    if !kelvin.is_finite() || kelvin < 0.0 {
        return fail(
            OptoStatus::InvalidArgument,
            format!("temperature must be finite and non-negative, got {kelvin}"),
        );
    }
    unsafe { (*params).0.temperature = kelvin };
    OptoStatus::Ok
}

/// Middle-mirror angular frequency omega1 (rad/s); NaN on a null handle.
///
/// # Safety
/// `params` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_params_omega1(params: *const OptoParams) -> f64 {
    if params.is_null() {
        return f64::NAN;
    }
    unsafe { (*params).0.omega1 }
}

/// Release a parameter handle. Null is a no-op.
///
/// # Safety
/// `params` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opto_params_free(params: *mut OptoParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Solve for the operating steady state of the driven cavity.
///
/// # Safety
/// `params` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opto_solve(
    params: *const OptoParams,
    out: *mut *mut OptoSteadyState,
) -> OptoStatus {
    if params.is_null() || out.is_null() {
        return fail(OptoStatus::NullArgument, "opto_solve: null argument");
    }
    guarded(|| match solve_operating(unsafe { &(*params).0 }) {
        Ok(ss) => unsafe { emit(out, OptoSteadyState(ss)) },
        Err(e) => fail(OptoStatus::Physics, e),
    })
}

/// Effective cavity detuning Delta (rad/s); NaN on null.
///
/// # Safety
/// `ss` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_steady_state_detuning(ss: *const OptoSteadyState) -> f64 {
    if ss.is_null() {
        return f64::NAN;
    }
    unsafe { (*ss).0.delta }
}

/// Bare pump-cavity detuning Delta_c (rad/s); NaN on null.
///
/// # Safety
/// `ss` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_steady_state_bare_detuning(ss: *const OptoSteadyState) -> f64 {
    if ss.is_null() {
        return f64::NAN;
    }
    unsafe { (*ss).0.delta_c }
}

/// Mean intracavity photon number; NaN on null.
///
/// # Safety
/// `ss` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_steady_state_photon_number(ss: *const OptoSteadyState) -> f64 {
    if ss.is_null() {
        return f64::NAN;
    }
    unsafe { (*ss).0.n_cav }
}

/// Static radiation-pressure displacement of the middle mirror (m); NaN on
/// null.
///
/// # Safety
/// `ss` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_steady_state_mirror_shift(ss: *const OptoSteadyState) -> f64 {
    if ss.is_null() {
        return f64::NAN;
    }
    unsafe { (*ss).0.q1s }
}

/// Static displacement of the external resonator (m); NaN on null.
///
/// # Safety
/// `ss` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_steady_state_resonator_shift(ss: *const OptoSteadyState) -> f64 {
    if ss.is_null() {
        return f64::NAN;
    }
    unsafe { (*ss).0.q2s }
}

/// Release a steady-state handle. Null is a no-op.
///
/// # Safety
/// `ss` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opto_steady_state_free(ss: *mut OptoSteadyState) {
    if !ss.is_null() {
        drop(unsafe { Box::from_raw(ss) });
    }
}

/// Compute reflection/transmission probabilities and noise spectra on a
/// uniform grid of `points` frequencies over `[omega_min, omega_max]` rad/s.
/// Pass `omega_min = omega_max = 0` for the default window (±10% around
/// omega1) and `points = 0` for the default resolution. Thermal terms use
/// the temperature stored in `params`.
///
/// # Safety
/// `params` and `ss` must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn opto_spectrum_compute(
    params: *const OptoParams,
    ss: *const OptoSteadyState,
    omega_min: f64,
    omega_max: f64,
    points: usize,
    mode: OptoMode,
    out: *mut *mut OptoSpectrum,
) -> OptoStatus {
    if params.is_null() || ss.is_null() || out.is_null() {
        return fail(
            OptoStatus::NullArgument,
            "opto_spectrum_compute: null argument",
        );
    }
    guarded(|| {
        let p = unsafe { &(*params).0 };
        let ss = unsafe { &(*ss).0 };
        let mut grid = FrequencyGrid::default_window(p.omega1);
        if omega_min != 0.0 || omega_max != 0.0 {
            grid.start = omega_min;
            grid.stop = omega_max;
        }
        if points != 0 {
            grid.points = points;
        }
        let xs = match grid.sample() {
            Ok(xs) => xs,
            Err(e) => return fail(OptoStatus::InvalidArgument, e),
        };
        let mode = match mode {
            OptoMode::Oracle => ResponseMode::Oracle,
            OptoMode::Rederived => ResponseMode::Rederived,
            OptoMode::PaperVerbatim => ResponseMode::PaperVerbatim,
        };
        match compute_spectrum(p, ss, &xs, p.temperature, mode) {
            Ok(spectrum) => unsafe { emit(out, OptoSpectrum(spectrum)) },
            Err(e @ ResponseError::NegativeTemperature { .. }) => {
                fail(OptoStatus::InvalidArgument, e)
            }
            Err(e) => fail(OptoStatus::Physics, e),
        }
    })
}

/// Number of grid points in a spectrum; 0 on null.
///
/// # Safety
/// `spectrum` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_spectrum_len(spectrum: *const OptoSpectrum) -> usize {
    if spectrum.is_null() {
        return 0;
    }
    unsafe { (*spectrum).0.points.len() }
}

/// Copy spectrum columns into caller-owned arrays of capacity `capacity`
/// (must be at least `opto_spectrum_len`). Any column pointer may be null to
/// skip that column.
///
/// # Safety
/// `spectrum` must be a live handle; every non-null column pointer must
/// reference at least `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn opto_spectrum_fill(
    spectrum: *const OptoSpectrum,
    omega: *mut f64,
    reflection: *mut f64,
    transmission: *mut f64,
    vacuum_noise: *mut f64,
    mirror_thermal: *mut f64,
    resonator_thermal: *mut f64,
    capacity: usize,
) -> OptoStatus {
    if spectrum.is_null() {
        return fail(OptoStatus::NullArgument, "opto_spectrum_fill: null handle");
    }
    let points = unsafe { &(*spectrum).0.points };
    if capacity < points.len() {
        return fail(
            OptoStatus::InvalidArgument,
            format!(
                "buffer capacity {capacity} is smaller than the spectrum length {}",
                points.len()
            ),
        );
    }
    for (i, pt) in points.iter().enumerate() {
        unsafe {
            for (dst, value) in [
                (omega, pt.omega),
                (reflection, pt.r),
                (transmission, pt.t),
                (vacuum_noise, pt.sv),
                (mirror_thermal, pt.s1t),
                (resonator_thermal, pt.s2t),
            ] {
                if !dst.is_null() {
                    dst.add(i).write(value);
                }
            }
        }
    }
    OptoStatus::Ok
}

/// Release a spectrum handle. Null is a no-op.
///
/// # Safety
/// `spectrum` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opto_spectrum_free(spectrum: *mut OptoSpectrum) {
    if !spectrum.is_null() {
        drop(unsafe { Box::from_raw(spectrum) });
    }
}

/// Detect routing channels on a computed spectrum.
///
/// # Safety
/// `spectrum`, `params`, and `ss` must be live handles and `out` a writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn opto_route(
    spectrum: *const OptoSpectrum,
    params: *const OptoParams,
    ss: *const OptoSteadyState,
    out: *mut *mut OptoRouting,
) -> OptoStatus {
    if spectrum.is_null() || params.is_null() || ss.is_null() || out.is_null() {
        return fail(OptoStatus::NullArgument, "opto_route: null argument");
    }
    guarded(|| {
        match find_channels(unsafe { &(*spectrum).0 }, unsafe { &(*params).0 }, unsafe {
            &(*ss).0
        }) {
            Ok(report) => unsafe { emit(out, OptoRouting(report)) },
            Err(e) => fail(OptoStatus::Routing, e),
        }
    })
}

/// Number of detected channels; 0 on null.
///
/// # Safety
/// `routing` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_routing_channel_count(routing: *const OptoRouting) -> usize {
    if routing.is_null() {
        return 0;
    }
    unsafe { (*routing).0.channels.len() }
}

/// Read one detected channel (channels are sorted by center frequency). Out
/// pointers may be null to skip fields.
///
/// # Safety
/// `routing` must be a live handle; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn opto_routing_channel(
    routing: *const OptoRouting,
    index: usize,
    kind: *mut OptoChannelKind,
    center: *mut f64,
    probability: *mut f64,
    width: *mut f64,
) -> OptoStatus {
    if routing.is_null() {
        return fail(OptoStatus::NullArgument, "opto_routing_channel: null handle");
    }
    let channels = unsafe { &(*routing).0.channels };
    let Some(ch) = channels.get(index) else {
        return fail(
            OptoStatus::InvalidArgument,
            format!("channel index {index} out of range ({} channels)", channels.len()),
        );
    };
    unsafe {
        if !kind.is_null() {
            kind.write(match ch.kind {
                ChannelKind::TransmitRight => OptoChannelKind::TransmitRight,
                ChannelKind::ReflectLeftLower => OptoChannelKind::ReflectLeftLower,
                ChannelKind::ReflectLeftUpper => OptoChannelKind::ReflectLeftUpper,
            });
        }
        if !center.is_null() {
            center.write(ch.center_omega);
        }
        if !probability.is_null() {
            probability.write(ch.probability);
        }
        if !width.is_null() {
            width.write(ch.width);
        }
    }
    OptoStatus::Ok
}

/// Half-separation omega0 of the reflected pair (rad/s); NaN when the report
/// has no split pair or the handle is null.
///
/// # Safety
/// `routing` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_routing_omega0(routing: *const OptoRouting) -> f64 {
    if routing.is_null() {
        return f64::NAN;
    }
    unsafe { (*routing).0.omega0.unwrap_or(f64::NAN) }
}

/// Largest total noise density found on the grid; NaN on null.
///
/// # Safety
/// `routing` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn opto_routing_noise_floor(routing: *const OptoRouting) -> f64 {
    if routing.is_null() {
        return f64::NAN;
    }
    unsafe { (*routing).0.noise_floor }
}

/// Release a routing handle. Null is a no-op.
///
/// # Safety
/// `routing` must be a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opto_routing_free(routing: *mut OptoRouting) {
    if !routing.is_null() {
        drop(unsafe { Box::from_raw(routing) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../optorouter/configs/fig2.conf"
    );

    fn load_fig2() -> *mut OptoParams {
        let path = CString::new(FIG2).unwrap();
        let mut params = ptr::null_mut();
        let status = unsafe { opto_params_load(path.as_ptr(), &mut params) };
        assert_eq!(status, OptoStatus::Ok);
        assert!(!params.is_null());
        params
    }

    #[test]
    fn full_pipeline_routes_three_channels() {
        let params = load_fig2();
        let omega1 = unsafe { opto_params_omega1(params) };
        assert!(omega1 > 8.41e5 && omega1 < 8.42e5);

        let mut ss = ptr::null_mut();
        assert_eq!(unsafe { opto_solve(params, &mut ss) }, OptoStatus::Ok);
        assert!(unsafe { opto_steady_state_photon_number(ss) } > 1e6);

        let mut spectrum = ptr::null_mut();
        let status = unsafe {
            opto_spectrum_compute(params, ss, 0.0, 0.0, 0, OptoMode::Oracle, &mut spectrum)
        };
        assert_eq!(status, OptoStatus::Ok);
        let len = unsafe { opto_spectrum_len(spectrum) };
        assert_eq!(len, 4001);

        let mut omegas = vec![0.0; len];
        let mut t = vec![0.0; len];
        let status = unsafe {
            opto_spectrum_fill(
                spectrum,
                omegas.as_mut_ptr(),
                ptr::null_mut(),
                t.as_mut_ptr(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                len,
            )
        };
        assert_eq!(status, OptoStatus::Ok);
        assert!((omegas[0] - 0.9 * omega1).abs() < 1e-6 * omega1);
        assert!(t.iter().cloned().fold(0.0, f64::max) > 0.95);

        let mut routing = ptr::null_mut();
        assert_eq!(
            unsafe { opto_route(spectrum, params, ss, &mut routing) },
            OptoStatus::Ok
        );
        assert_eq!(unsafe { opto_routing_channel_count(routing) }, 3);

        let mut kinds = Vec::new();
        for i in 0..3 {
            let mut kind = OptoChannelKind::TransmitRight;
            let mut center = 0.0;
            let mut probability = 0.0;
            let mut width = 0.0;
            let status = unsafe {
                opto_routing_channel(
                    routing,
                    i,
                    &mut kind,
                    &mut center,
                    &mut probability,
                    &mut width,
                )
            };
            assert_eq!(status, OptoStatus::Ok);
            assert!(center > 0.8e6 && center < 0.9e6);
            assert!(probability > 0.9);
            assert!(width > 0.0);
            kinds.push(kind);
        }
        assert_eq!(
            kinds,
            [
                OptoChannelKind::ReflectLeftLower,
                OptoChannelKind::TransmitRight,
                OptoChannelKind::ReflectLeftUpper
            ]
        );

        let omega0 = unsafe { opto_routing_omega0(routing) };
        assert!(omega0 > 4.5e3 && omega0 < 5.0e3, "omega0 = {omega0}");
        assert!(unsafe { opto_routing_noise_floor(routing) } > 1.0);

        unsafe {
            opto_routing_free(routing);
            opto_spectrum_free(spectrum);
            opto_steady_state_free(ss);
            opto_params_free(params);
        }
    }

    #[test]
    fn decoupled_params_route_to_a_single_channel() {
        let params = load_fig2();
        assert_eq!(
            unsafe { opto_params_set_coulomb_lambda(params, 0.0) },
            OptoStatus::Ok
        );
        let mut ss = ptr::null_mut();
        assert_eq!(unsafe { opto_solve(params, &mut ss) }, OptoStatus::Ok);
        let mut spectrum = ptr::null_mut();
        let status = unsafe {
            opto_spectrum_compute(params, ss, 0.0, 0.0, 0, OptoMode::Oracle, &mut spectrum)
        };
        assert_eq!(status, OptoStatus::Ok);
        let mut routing = ptr::null_mut();
        assert_eq!(
            unsafe { opto_route(spectrum, params, ss, &mut routing) },
            OptoStatus::Ok
        );
        assert_eq!(unsafe { opto_routing_channel_count(routing) }, 1);
        assert!(unsafe { opto_routing_omega0(routing) }.is_nan());
        unsafe {
            opto_routing_free(routing);
            opto_spectrum_free(spectrum);
            opto_steady_state_free(ss);
            opto_params_free(params);
        }
    }

    #[test]
    fn null_arguments_are_rejected_with_a_message() {
        let mut out = ptr::null_mut();
        assert_eq!(
            unsafe { opto_solve(ptr::null(), &mut out) },
            OptoStatus::NullArgument
        );
        let msg = unsafe { CStr::from_ptr(opto_last_error()) };
        assert!(msg.to_str().unwrap().contains("null"));

        assert!(unsafe { opto_params_omega1(ptr::null()) }.is_nan());
        assert_eq!(unsafe { opto_spectrum_len(ptr::null()) }, 0);
        assert_eq!(unsafe { opto_routing_channel_count(ptr::null()) }, 0);
        unsafe {
            opto_params_free(ptr::null_mut());
            opto_steady_state_free(ptr::null_mut());
            opto_spectrum_free(ptr::null_mut());
            opto_routing_free(ptr::null_mut());
        }
    }

    #[test]
    fn missing_config_reports_a_config_error() {
        let path = CString::new("/nonexistent/nowhere.conf").unwrap();
        let mut params = ptr::null_mut();
        assert_eq!(
            unsafe { opto_params_load(path.as_ptr(), &mut params) },
            OptoStatus::Config
        );
        let msg = unsafe { CStr::from_ptr(opto_last_error()) }
            .to_str()
            .unwrap();
        assert!(msg.contains("nowhere.conf"), "message was: {msg}");
    }

    #[test]
    fn parse_clone_and_setters_support_sweeps() {
        let text = std::fs::read_to_string(FIG2).unwrap();
        let ctext = CString::new(text).unwrap();
        let mut params = ptr::null_mut();
        assert_eq!(
            unsafe { opto_params_parse(ctext.as_ptr(), &mut params) },
            OptoStatus::Ok
        );

        let mut copy = ptr::null_mut();
        assert_eq!(
            unsafe { opto_params_clone(params, &mut copy) },
            OptoStatus::Ok
        );
        assert_eq!(
            unsafe { opto_params_set_coulomb_lambda(copy, f64::NAN) },
            OptoStatus::InvalidArgument
        );
        assert_eq!(
            unsafe { opto_params_set_temperature(copy, -0.5) },
            OptoStatus::InvalidArgument
        );
        assert_eq!(
            unsafe { opto_params_set_temperature(copy, 0.0) },
            OptoStatus::Ok
        );
        let (a, b) = unsafe { (opto_params_omega1(params), opto_params_omega1(copy)) };
        assert_eq!(a, b);
        unsafe {
            opto_params_free(copy);
            opto_params_free(params);
        }
    }

    #[test]
    fn undersized_buffers_are_rejected() {
        let params = load_fig2();
        let mut ss = ptr::null_mut();
        assert_eq!(unsafe { opto_solve(params, &mut ss) }, OptoStatus::Ok);
        let mut spectrum = ptr::null_mut();
        let status = unsafe {
            opto_spectrum_compute(params, ss, 0.0, 0.0, 101, OptoMode::Rederived, &mut spectrum)
        };
        assert_eq!(status, OptoStatus::Ok);
        let mut buf = vec![0.0; 100];
        let status = unsafe {
            opto_spectrum_fill(
                spectrum,
                buf.as_mut_ptr(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                buf.len(),
            )
        };
        assert_eq!(status, OptoStatus::InvalidArgument);
        unsafe {
            opto_spectrum_free(spectrum);
            opto_steady_state_free(ss);
            opto_params_free(params);
        }
    }

    #[test]
    fn bad_grids_are_rejected_as_invalid_arguments() {
        let params = load_fig2();
        let mut ss = ptr::null_mut();
        assert_eq!(unsafe { opto_solve(params, &mut ss) }, OptoStatus::Ok);
        let mut spectrum = ptr::null_mut();
        let status = unsafe {
            opto_spectrum_compute(
                params,
                ss,
                2.0e5,
                1.0e5,
                501,
                OptoMode::Oracle,
                &mut spectrum,
            )
        };
        assert_eq!(status, OptoStatus::InvalidArgument);
        unsafe {
            opto_steady_state_free(ss);
            opto_params_free(params);
        }
    }

    #[test]
    fn generated_header_exports_the_surface() {
        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/optorouter.h");
        let text = std::fs::read_to_string(header).expect("build.rs must generate the header");
        for needle in [
            "#ifndef OPTOROUTER_H",
            "typedef struct OptoParams OptoParams;",
            "OPTO_STATUS_OK",
            "opto_spectrum_fill",
            "opto_routing_channel",
            "opto_last_error",
        ] {
            assert!(text.contains(needle), "header is missing `{needle}`");
        }
    }

    #[test]
    fn version_is_a_nul_terminated_semver() {
        let v = unsafe { CStr::from_ptr(opto_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
