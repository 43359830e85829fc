//! Router semantics on top of the spectra: channel detection, the tunable
//! splitting, coupling sweeps, and noise budgeting.
//!
//! A probe photon leaves through one of three channels. With the coupling on,
//! transmission opens in a narrow window at the mirror frequency while
//! reflection peaks at the two hybrid-mode frequencies `ω1 ± ω0`; with the
//! coupling off, the photon reflects at `ω1`. [`find_channels`] turns a
//! computed [`Spectrum`] into that decomposition by local-extremum search
//! with sub-grid (quadratic) center refinement, [`sweep_lambda`] tabulates
//! `ω0` against the Coulomb coupling, and [`noise_budget`] compares the noise
//! spectra against the signal at each detected channel center.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::params::SystemParams;
use crate::response::{self, FrequencyGrid, ResponseMode, Spectrum};
use crate::steady_state::{self, SteadyState};

/// Minimum probability a spectral extremum must reach to count as a channel.
/// Distinct from the configurable `routing_threshold` (default 0.95) used for
/// "complete routing" claims: 0.5 is where a peak stops being a channel at
/// all.
pub const DETECTION_FLOOR: f64 = 0.5;

/// Channel probabilities may exceed 1 by this much before the report is
/// considered unphysical. The linearized model itself puts the reflection
/// peaks at ≈ 1.020 at the reference operating point (the conjugate-field
/// term adds a percent-level sideband contribution), so the slack must sit
/// above that — this is a property of the model, not a numerical artifact.
pub const PROBABILITY_SLACK: f64 = 0.03;

/// Fewest grid points channel detection will work with.
pub const MIN_GRID_POINTS: usize = 401;

/// A detected channel must span at least this many grid steps, or the grid is
/// declared too coarse to trust the detection.
pub const MIN_WIDTH_STEPS: f64 = 3.0;

/// The grid must span this many predicted splittings either side of the
/// reference frequency before the two reflect channels are searched for.
pub const COVERAGE_SPLITTINGS: f64 = 3.0;

/// Which output port a channel feeds, and on which side of the reference
/// frequency it sits for the reflect pair. A lone reflect channel sitting at
/// the reference frequency itself is labeled lower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    TransmitRight,
    ReflectLeftLower,
    ReflectLeftUpper,
}

impl ChannelKind {
    pub fn is_reflect(&self) -> bool {
        matches!(
            self,
            ChannelKind::ReflectLeftLower | ChannelKind::ReflectLeftUpper
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            ChannelKind::TransmitRight => "transmit_right",
            ChannelKind::ReflectLeftLower => "reflect_left_lower",
            ChannelKind::ReflectLeftUpper => "reflect_left_upper",
        }
    }
}

/// One detected output channel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Channel {
    pub kind: ChannelKind,
    /// Sub-grid channel center (rad/s).
    pub center_omega: f64,
    /// T at the center for a transmit channel, R for a reflect channel.
    /// In `[0, 1 + PROBABILITY_SLACK]` for physical configurations.
    pub probability: f64,
    /// Full width at half-extremum (rad/s); clamped at the grid edges when
    /// the half level is never crossed inside the window.
    pub width: f64,
}

/// Everything channel detection learned from one spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct RoutingReport {
    /// Coulomb coupling the spectrum was computed at (Hz/m²).
    pub coulomb_lambda: f64,
    /// Detected channels, ascending in center frequency.
    pub channels: Vec<Channel>,
    /// Half-separation of the two reflect channels (rad/s); present exactly
    /// when two reflect channels were found.
    pub omega0: Option<f64>,
    /// Max over the grid of Sv + S1T + S2T.
    pub noise_floor: f64,
    /// Clamped-negative count inherited from the spectrum.
    pub clamp_count: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RoutingError {
    #[error("no spectral extremum reaches the channel detection floor {threshold}")]
    NoChannels { threshold: f64 },
    #[error("grid too coarse: channel of width {width:.4e} rad/s spans fewer than {MIN_WIDTH_STEPS} grid steps of {step:.4e} rad/s")]
    GridTooCoarse { width: f64, step: f64 },
    #[error("grid too narrow for channel detection: need [{required_low:.8e}, {required_high:.8e}] rad/s covered by at least {MIN_GRID_POINTS} points")]
    GridTooNarrow { required_low: f64, required_high: f64 },
}

/// First-order estimate of the channel splitting, `ħ|λ|/(2 m2 ω2)` (rad/s).
/// Used only to size the search window and cross-check the detected value —
/// never as the reported `ω0`.
pub fn predicted_splitting(params: &SystemParams) -> f64 {
    params.constants.hbar * params.coulomb_lambda.abs() / (2.0 * params.m2 * params.omega2)
}

/// Optical-spring estimate of where the mirror-like resonance actually sits
/// (rad/s): the real zero of the dressed mirror susceptibility, with the
/// radiation-pressure self-energy evaluated at the bare frequency (one
/// iteration). At the reference drive this lands ~2×10⁻³·ω1 below ω1 — the
/// reflect peaks are measurably red-shifted from the bare mirror frequency,
/// and with the coupling on the reflect pair's midpoint inherits half the
/// shift (the resonator-like branch feels no radiation pressure).
pub fn spring_shifted_peak(params: &SystemParams, ss: &SteadyState) -> f64 {
    let s = params.scaled();
    let delta = ss.delta / params.omega1;
    let a = Complex64::new(2.0 * s.kappa, delta - 1.0);
    let b = Complex64::new(2.0 * s.kappa, -(delta + 1.0));
    let self_energy = 2.0 * s.g * s.g * ss.n_cav * delta / (a * b);
    (1.0 - self_energy.re).max(0.0).sqrt() * params.omega1
}

/// Quadratic-interpolated extremum through three uniformly spaced samples.
/// Returns (center, value); falls back to the middle sample when the parabola
/// is not concave.
fn refine_peak(xs: &[f64], vs: &[f64], i: usize) -> (f64, f64) {
    let h = 0.5 * (xs[i + 1] - xs[i - 1]);
    let denom = vs[i - 1] - 2.0 * vs[i] + vs[i + 1];
    if denom >= 0.0 {
        return (xs[i], vs[i]);
    }
    let offset = 0.5 * h * (vs[i - 1] - vs[i + 1]) / denom;
    let value = vs[i] - (vs[i - 1] - vs[i + 1]).powi(2) / (8.0 * denom);
    (xs[i] + offset, value)
}

/// Full width of the peak at `i` at half its height, linearly interpolating
/// the crossings and clamping to the grid edges when a side never crosses.
fn half_width(xs: &[f64], vs: &[f64], i: usize, peak: f64) -> f64 {
    let half = 0.5 * peak;
    let left = {
        let mut j = i;
        while j > 0 && vs[j] > half {
            j -= 1;
        }
        if vs[j] > half {
            xs[0]
        } else {
            let frac = (half - vs[j]) / (vs[j + 1] - vs[j]);
            xs[j] + frac * (xs[j + 1] - xs[j])
        }
    };
    let right = {
        let mut j = i;
        while j + 1 < vs.len() && vs[j] > half {
            j += 1;
        }
        if vs[j] > half {
            xs[vs.len() - 1]
        } else {
            let frac = (half - vs[j]) / (vs[j - 1] - vs[j]);
            xs[j] - frac * (xs[j] - xs[j - 1])
        }
    };
    right - left
}

/// Indices of interior local maxima (left edge of any plateau).
fn local_maxima(vs: &[f64]) -> Vec<usize> {
    (1..vs.len() - 1)
        .filter(|&i| vs[i] > vs[i - 1] && vs[i] >= vs[i + 1])
        .collect()
}

/// Detect the router's output channels in a computed spectrum.
///
/// The search window must contain the reference frequency (the mirror
/// frequency `ω1` when the optomechanical coupling is active, the effective
/// detuning otherwise), must hold at least [`MIN_GRID_POINTS`] samples, and —
/// when the Coulomb coupling is on — must span [`COVERAGE_SPLITTINGS`]
/// predicted splittings either side of the reference so both reflect
/// channels fall inside it.
///
/// Reflect channels are local maxima of R at or above [`DETECTION_FLOOR`];
/// the transmit channel is the local maximum of T nearest the reference
/// frequency, accepted only within half a predicted splitting (or four grid
/// steps, whichever is larger) of it — T also peaks far outside the routing
/// window wherever the bare cavity transmits, and those wings are not
/// channels.
pub fn find_channels(
    spectrum: &Spectrum,
    params: &SystemParams,
    ss: &SteadyState,
) -> Result<RoutingReport, RoutingError> {
    let xs = &spectrum.grid;
    let n = xs.len();
    let coupled = params.g.abs() * ss.c_s.norm() > 0.0;
    let omega_ref = if coupled { params.omega1 } else { ss.delta };
    let omega0_hat = predicted_splitting(params);

    let (required_low, required_high) = if coupled && params.coulomb_lambda != 0.0 {
        (
            omega_ref - COVERAGE_SPLITTINGS * omega0_hat,
            omega_ref + COVERAGE_SPLITTINGS * omega0_hat,
        )
    } else {
        (omega_ref, omega_ref)
    };
    if n < MIN_GRID_POINTS || xs[0] > required_low || xs[n - 1] < required_high {
        return Err(RoutingError::GridTooNarrow {
            required_low,
            required_high,
        });
    }
    let step = (xs[n - 1] - xs[0]) / (n - 1) as f64;

    let rs: Vec<f64> = spectrum.points.iter().map(|p| p.r).collect();
    let ts: Vec<f64> = spectrum.points.iter().map(|p| p.t).collect();

    let mut channels: Vec<Channel> = Vec::new();

    for i in local_maxima(&rs) {
        let (center, probability) = refine_peak(xs, &rs, i);
        if probability < DETECTION_FLOOR {
            continue;
        }
        let kind = if center <= omega_ref {
            ChannelKind::ReflectLeftLower
        } else {
            ChannelKind::ReflectLeftUpper
        };
        channels.push(Channel {
            kind,
            center_omega: center,
            probability,
            width: half_width(xs, &rs, i, probability),
        });
    }

    let transmit_gate = (0.5 * omega0_hat).max(4.0 * step);
    let best_t = local_maxima(&ts)
        .into_iter()
        .map(|i| (i, refine_peak(xs, &ts, i)))
        .filter(|&(_, (_, probability))| probability >= DETECTION_FLOOR)
        .min_by(|a, b| {
            let da = (a.1 .0 - omega_ref).abs();
            let db = (b.1 .0 - omega_ref).abs();
            da.partial_cmp(&db).unwrap()
        });
    if let Some((i, (center, probability))) = best_t {
        if (center - omega_ref).abs() <= transmit_gate {
            channels.push(Channel {
                kind: ChannelKind::TransmitRight,
                center_omega: center,
                probability,
                width: half_width(xs, &ts, i, probability),
            });
        }
    }

    if channels.is_empty() {
        return Err(RoutingError::NoChannels {
            threshold: DETECTION_FLOOR,
        });
    }
    channels.sort_by(|a, b| a.center_omega.partial_cmp(&b.center_omega).unwrap());

    for ch in &channels {
        if ch.width < MIN_WIDTH_STEPS * step {
            return Err(RoutingError::GridTooCoarse {
                width: ch.width,
                step,
            });
        }
    }

    let reflect_centers: Vec<f64> = channels
        .iter()
        .filter(|c| c.kind.is_reflect())
        .map(|c| c.center_omega)
        .collect();
    let omega0 = match reflect_centers.as_slice() {
        [lower, upper] => Some(0.5 * (upper - lower)),
        _ => None,
    };

    let noise_floor = spectrum
        .points
        .iter()
        .map(|p| p.sv + p.s1t + p.s2t)
        .fold(0.0, f64::max);

    Ok(RoutingReport {
        coulomb_lambda: params.coulomb_lambda,
        channels,
        omega0,
        noise_floor,
        clamp_count: spectrum.clamp_count,
    })
}

/// One row of a coupling sweep. Value columns are present when the
/// corresponding channel was detected; `r_lower`/`r_upper` are the reflect
/// probabilities in ascending center order (a lone reflect channel fills
/// `r_lower`). A failed row records the failure and leaves the sweep running.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// Coulomb coupling (Hz/m²).
    pub lambda: f64,
    pub omega0: Option<f64>,
    pub t_center: Option<f64>,
    pub r_lower: Option<f64>,
    pub r_upper: Option<f64>,
    pub error: Option<String>,
}

/// Sweep the Coulomb coupling over `lambda_values`, re-solving the steady
/// state per value (the coupling shifts the operating point through the
/// effective stiffness — a stale branch is never reused). Rows come back
/// sorted ascending in λ; per-row failures are recorded in the row.
pub fn sweep_lambda(
    params: &SystemParams,
    lambda_values: &[f64],
    grid: Option<FrequencyGrid>,
) -> Vec<SweepRow> {
    let mut values = lambda_values.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());

    values
        .par_iter()
        .map(|&lambda| {
            let mut p = params.clone();
            p.coulomb_lambda = lambda;
            match sweep_row(&p, grid) {
                Ok(row) => row,
                Err(err) => SweepRow {
                    lambda,
                    omega0: None,
                    t_center: None,
                    r_lower: None,
                    r_upper: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect()
}

fn sweep_row(params: &SystemParams, grid: Option<FrequencyGrid>) -> Result<SweepRow, crate::Error> {
    let ss = steady_state::solve_operating(params)?;
    let grid = grid
        .unwrap_or_else(|| FrequencyGrid::default_window(params.omega1))
        .sample()?;
    let spectrum = response::compute_spectrum(
        params,
        &ss,
        &grid,
        params.temperature,
        ResponseMode::Oracle,
    )?;
    let report = find_channels(&spectrum, params, &ss)?;

    let reflects: Vec<&Channel> = report
        .channels
        .iter()
        .filter(|c| c.kind.is_reflect())
        .collect();
    Ok(SweepRow {
        lambda: params.coulomb_lambda,
        omega0: report.omega0,
        t_center: report
            .channels
            .iter()
            .find(|c| c.kind == ChannelKind::TransmitRight)
            .map(|c| c.probability),
        r_lower: reflects.first().map(|c| c.probability),
        r_upper: reflects.get(1).map(|c| c.probability),
        error: None,
    })
}

/// Noise against signal at one detected channel center (values read at the
/// nearest grid sample).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseAtChannel {
    pub kind: ChannelKind,
    pub center_omega: f64,
    /// max(R, T) at the center.
    pub signal: f64,
    pub sv: f64,
    pub s1t: f64,
    pub s2t: f64,
    /// (Sv + S1T + S2T) / signal.
    pub ratio: f64,
}

/// Location and size of a grid maximum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub omega: f64,
}

/// Noise spectra summarized against the detected channels.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseBudget {
    /// Bath temperature the spectra were evaluated at (K).
    pub temperature: f64,
    pub max_sv: Extremum,
    pub max_s1t: Extremum,
    pub max_s2t: Extremum,
    pub channels: Vec<NoiseAtChannel>,
    /// The configured ceiling on the per-channel ratio, echoed for reports.
    pub noise_ceiling: f64,
}

/// Evaluate the noise spectra over `grid` at `temperature` and compare them
/// against the signal at each detected channel center.
pub fn noise_budget(
    params: &SystemParams,
    ss: &SteadyState,
    grid: &[f64],
    temperature: f64,
) -> Result<NoiseBudget, crate::Error> {
    let spectrum =
        response::compute_spectrum(params, ss, grid, temperature, ResponseMode::Oracle)?;
    let report = find_channels(&spectrum, params, ss)?;

    let max_of = |f: fn(&crate::response::SpectrumPoint) -> f64| -> Extremum {
        let mut best = Extremum {
            value: f64::MIN,
            omega: f64::NAN,
        };
        for p in &spectrum.points {
            let v = f(p);
            if v > best.value {
                best = Extremum {
                    value: v,
                    omega: p.omega,
                };
            }
        }
        best
    };

    let channels = report
        .channels
        .iter()
        .map(|ch| {
            let i = nearest_index(grid, ch.center_omega);
            let p = &spectrum.points[i];
            let signal = p.r.max(p.t);
            NoiseAtChannel {
                kind: ch.kind,
                center_omega: ch.center_omega,
                signal,
                sv: p.sv,
                s1t: p.s1t,
                s2t: p.s2t,
                ratio: (p.sv + p.s1t + p.s2t) / signal,
            }
        })
        .collect();

    Ok(NoiseBudget {
        temperature,
        max_sv: max_of(|p| p.sv),
        max_s1t: max_of(|p| p.s1t),
        max_s2t: max_of(|p| p.s2t),
        channels,
        noise_ceiling: params.noise_ceiling,
    })
}

fn nearest_index(grid: &[f64], omega: f64) -> usize {
    let i = grid.partition_point(|&x| x < omega);
    if i == 0 {
        return 0;
    }
    if i >= grid.len() {
        return grid.len() - 1;
    }
    if (grid[i] - omega).abs() < (omega - grid[i - 1]).abs() {
        i
    } else {
        i - 1
    }
}
