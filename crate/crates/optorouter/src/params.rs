//! Physical constants, system parameters, and derived couplings.
//!
//! All public quantities are SI: frequencies and rates in rad/s, masses in kg,
//! lengths in m, powers in W, temperatures in K. The solvers do not work in SI
//! directly — the raw numbers span ~50 orders of magnitude — so this module
//! also owns the internal rescaling (frequencies in units of `omega1`,
//! positions in units of the mirror's zero-point length) used everywhere else.

use serde::Serialize;

/// Reduced Planck constant (J·s), CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant (J/K), exact since the 2019 SI redefinition.
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum (m/s), exact.
pub const C_LIGHT: f64 = 2.997_924_58e8;
/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Fundamental constants used by the model, bundled so alternative values can
/// be injected in tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
    /// Speed of light (m/s).
    pub c: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: HBAR,
            k_b: K_B,
            c: C_LIGHT,
            eps0: EPSILON_0,
        }
    }
}

/// Convention used to convert pump power into the drive amplitude `eps_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EpsilonConvention {
    /// `eps_l = sqrt(2 kappa P / (hbar omega_l))` — dimensionally consistent
    /// photon-flux form. Default.
    WithHbar,
    /// `eps_l = sqrt(2 kappa P / omega_l)` — literal transcription of the
    /// source convention; kept selectable for comparison runs.
    PaperVerbatim,
}

/// How the cavity detuning is specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetuningMode {
    /// `detuning_value` is the target *effective* detuning `Delta` (pump
    /// relative to the pulled cavity resonance). The bare detuning `Delta_c`
    /// is derived so the selected branch lands on the target. Default.
    FixEffective,
    /// `detuning_value` is the *bare* detuning `Delta_c`; the effective
    /// detuning follows from the steady state.
    FixBare,
}

/// One `key = value` assignment from a config file, with its 1-based line
/// number for diagnostics.
#[derive(Debug, Clone)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Ordered key/value assignments from a config file (duplicates already
/// rejected by the loader).
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    pub entries: Vec<ConfigEntry>,
}

impl ConfigMap {
    pub fn get(&self, key: &str) -> Option<&ConfigEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Build a map from `(key, value)` pairs; lines are synthesized. Intended
    /// for tests and embedders that do not go through a file.
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        ConfigMap {
            entries: pairs
                .into_iter()
                .enumerate()
                .map(|(i, (k, v))| ConfigEntry {
                    key: k.into(),
                    value: v.into(),
                    line: i + 1,
                })
                .collect(),
        }
    }
}

/// Config keys the engine understands. Anything else in a config file is
/// reported as a warning (with its line number), never silently dropped.
pub const KNOWN_KEYS: &[&str] = &[
    "lambda_pump_m",
    "L_m",
    "f1_hz",
    "omega1_rad_s",
    "f2_hz",
    "omega2_rad_s",
    "m1_kg",
    "m2_kg",
    "Q1",
    "Q2",
    "kappa_rad_s",
    "kappa_over_omega1",
    "power_W",
    "temperature_K",
    "coulomb_lambda",
    "charge1_C",
    "charge2_C",
    "r0_m",
    "epsilon_convention",
    "detuning_mode",
    "detuning_value_rad_s",
    "pulse_center_rad_s",
    "pulse_fwhm_rad_s",
    "routing_threshold",
    "noise_ceiling",
];

pub fn is_known_key(key: &str) -> bool {
    KNOWN_KEYS.contains(&key)
}

/// Errors from parameter derivation and validation.
#[derive(Debug, thiserror::Error)]
pub enum ParamError {
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("config key `{key}` (line {line}): value `{value}` does not parse as a finite number")]
    NonFinite {
        key: String,
        value: String,
        line: usize,
    },
    #[error("config key `{key}` (line {line}): {value} must be strictly positive")]
    NonPositive { key: String, value: f64, line: usize },
    #[error("config key `{key}` (line {line}): {value} must be non-negative")]
    Negative { key: String, value: f64, line: usize },
    #[error("config keys `{a}` and `{b}` both set; they specify the same quantity")]
    ConflictingKeys { a: String, b: String },
    #[error("config key `{key}` (line {line}): unknown value `{value}` (expected one of {expected})")]
    BadEnum {
        key: String,
        value: String,
        line: usize,
        expected: &'static str,
    },
    #[error("separation r0 must be strictly positive, got {0} m")]
    NonPositiveDistance(f64),
}

/// Complete physical description of one router configuration. All fields SI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    /// Pump (laser) wavelength (m).
    pub lambda_pump: f64,
    /// Cavity length (m).
    pub cavity_len: f64,
    /// Middle-mirror mechanical angular frequency omega_1 (rad/s).
    pub omega1: f64,
    /// External-resonator mechanical angular frequency omega_2 (rad/s).
    pub omega2: f64,
    /// Middle-mirror effective mass (kg).
    pub m1: f64,
    /// External-resonator effective mass (kg).
    pub m2: f64,
    /// Middle-mirror mechanical quality factor (dimensionless).
    pub quality1: f64,
    /// External-resonator mechanical quality factor (dimensionless).
    pub quality2: f64,
    /// Mechanical damping rate gamma_1 = omega1/Q1 (rad/s).
    pub gamma1: f64,
    /// Mechanical damping rate gamma_2 = omega2/Q2 (rad/s).
    pub gamma2: f64,
    /// Cavity half-leakage rate kappa: each end mirror leaks photons at 2*kappa (rad/s).
    pub kappa: f64,
    /// Pump power (W).
    pub power: f64,
    /// Mechanical bath temperature (K).
    pub temperature: f64,
    /// Coulomb coupling strength lambda between the two oscillators (rad/s/m^2).
    pub coulomb_lambda: f64,
    /// Cavity resonance angular frequency omega_c = 2 pi c / lambda_pump (rad/s).
    pub omega_c: f64,
    /// Pump angular frequency omega_l = omega_c - nominal detuning (rad/s).
    pub omega_l: f64,
    /// Optomechanical coupling g = omega_c / L (rad/s per m of mirror travel).
    pub g: f64,
    /// Pump drive amplitude eps_l (rad/s), per `epsilon_convention`.
    pub eps_l: f64,
    /// Convention used for `eps_l`.
    pub epsilon_convention: EpsilonConvention,
    /// Interpretation of `detuning_value`.
    pub detuning_mode: DetuningMode,
    /// Target effective detuning or bare detuning (rad/s), per `detuning_mode`.
    pub detuning_value: f64,
    /// Mirror–resonator separation (m), when provided; used for the
    /// small-displacement regime check.
    pub r0: Option<f64>,
    /// Optional probe pulse profile multiplying the R/T spectra.
    pub pulse: Option<PulseProfile>,
    /// Probability a channel must reach to count as "complete" routing.
    pub routing_threshold: f64,
    /// Largest acceptable noise-to-signal ratio at a channel center.
    pub noise_ceiling: f64,
    /// Constants in force for every derived quantity.
    pub constants: PhysicalConstants,
}

/// Lorentzian spectral profile of the probe photon. When configured, the
/// reflection/transmission spectra are weighted by
/// `(w/2)^2 / ((omega - center)^2 + (w/2)^2)` pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseProfile {
    /// Pulse carrier frequency (rad/s).
    pub center: f64,
    /// Full width at half maximum (rad/s).
    pub fwhm: f64,
}

impl PulseProfile {
    /// Weight of the profile at `omega`, in (0, 1].
    pub fn weight(&self, omega: f64) -> f64 {
        let hw = 0.5 * self.fwhm;
        hw * hw / ((omega - self.center) * (omega - self.center) + hw * hw)
    }
}

/// Default channel-probability threshold for "complete" routing claims.
pub const DEFAULT_ROUTING_THRESHOLD: f64 = 0.95;
/// Default ceiling on (Sv + S1T + S2T)/signal at a channel center.
pub const DEFAULT_NOISE_CEILING: f64 = 0.1;

/// Outcome of the operating-regime checks.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    /// Sideband-resolution ratio omega1/kappa.
    pub sideband_ratio: f64,
    /// True when omega1/kappa >= 10 (resolved-sideband operation).
    pub resolved_sideband: bool,
    /// |Delta - omega1| / omega1 when the effective detuning is known.
    pub detuning_offset: Option<f64>,
    /// True when the pump sits near the red sideband (offset <= 0.1).
    pub red_detuned: Option<bool>,
    /// q1s / r0 when both the steady displacement and the separation are known.
    pub displacement_ratio: Option<f64>,
    /// True when the steady displacement is small against the separation
    /// (ratio < 0.01), so the linearized Coulomb coupling holds.
    pub small_displacement: Option<bool>,
    /// Human-readable diagnostics for anything out of regime.
    pub warnings: Vec<String>,
}

/// Coulomb coupling strength between two charged oscillators a distance `r0`
/// apart: `lambda = q1 * q2 / (2 pi hbar eps0 r0^3)` (rad/s/m^2).
///
/// `q1`, `q2` are the stored charges (C); either sign is accepted. Errors with
/// [`ParamError::NonPositiveDistance`] when `r0 <= 0`.
pub fn coulomb_strength(q1: f64, q2: f64, r0: f64) -> Result<f64, ParamError> {
    coulomb_strength_with(q1, q2, r0, &PhysicalConstants::default())
}

/// [`coulomb_strength`] with explicit constants.
pub fn coulomb_strength_with(
    q1: f64,
    q2: f64,
    r0: f64,
    consts: &PhysicalConstants,
) -> Result<f64, ParamError> {
    // NaN must land in the error arm too, hence the explicit check.
    if r0 <= 0.0 || r0.is_nan() {
        return Err(ParamError::NonPositiveDistance(r0));
    }
    Ok(q1 * q2 / (2.0 * std::f64::consts::PI * consts.hbar * consts.eps0 * r0.powi(3)))
}

struct KeyReader<'a> {
    map: &'a ConfigMap,
}

impl<'a> KeyReader<'a> {
    fn raw(&self, key: &str) -> Option<&'a ConfigEntry> {
        self.map.get(key)
    }

    fn number(&self, key: &str) -> Result<Option<(f64, usize)>, ParamError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(e) => {
                let v: f64 = e.value.parse().map_err(|_| ParamError::NonFinite {
                    key: key.to_string(),
                    value: e.value.clone(),
                    line: e.line,
                })?;
                if !v.is_finite() {
                    return Err(ParamError::NonFinite {
                        key: key.to_string(),
                        value: e.value.clone(),
                        line: e.line,
                    });
                }
                Ok(Some((v, e.line)))
            }
        }
    }

    fn required_positive(&self, key: &str) -> Result<f64, ParamError> {
        let (v, line) = self
            .number(key)?
            .ok_or_else(|| ParamError::MissingKey(key.to_string()))?;
        if v <= 0.0 {
            return Err(ParamError::NonPositive {
                key: key.to_string(),
                value: v,
                line,
            });
        }
        Ok(v)
    }

    /// Like [`Self::required_positive`] but admits `inf` — used for the
    /// quality factors, where Q = inf is the lossless limit (gamma = 0).
    fn required_positive_or_inf(&self, key: &str) -> Result<f64, ParamError> {
        match self.map.get(key) {
            None => Err(ParamError::MissingKey(key.to_string())),
            Some(e) => {
                let v: f64 = e.value.parse().map_err(|_| ParamError::NonFinite {
                    key: key.to_string(),
                    value: e.value.clone(),
                    line: e.line,
                })?;
                if v.is_nan() || v <= 0.0 {
                    return Err(ParamError::NonPositive {
                        key: key.to_string(),
                        value: v,
                        line: e.line,
                    });
                }
                Ok(v)
            }
        }
    }

    fn required_non_negative(&self, key: &str) -> Result<f64, ParamError> {
        let (v, line) = self
            .number(key)?
            .ok_or_else(|| ParamError::MissingKey(key.to_string()))?;
        if v < 0.0 {
            return Err(ParamError::Negative {
                key: key.to_string(),
                value: v,
                line,
            });
        }
        Ok(v)
    }

    /// Exactly one of two alternative keys; `to_rad` converts the first
    /// (e.g. Hz -> rad/s), the second is taken as-is.
    fn one_of_positive(
        &self,
        primary: &str,
        to_rad: f64,
        alt: &str,
    ) -> Result<f64, ParamError> {
        match (self.number(primary)?, self.number(alt)?) {
            (Some(_), Some(_)) => Err(ParamError::ConflictingKeys {
                a: primary.to_string(),
                b: alt.to_string(),
            }),
            (Some((v, line)), None) => {
                if v <= 0.0 {
                    return Err(ParamError::NonPositive {
                        key: primary.to_string(),
                        value: v,
                        line,
                    });
                }
                Ok(v * to_rad)
            }
            (None, Some((v, line))) => {
                if v <= 0.0 {
                    return Err(ParamError::NonPositive {
                        key: alt.to_string(),
                        value: v,
                        line,
                    });
                }
                Ok(v)
            }
            (None, None) => Err(ParamError::MissingKey(format!("{primary} (or {alt})"))),
        }
    }
}

/// Derive a full [`SystemParams`] from raw config assignments.
///
/// Returns the parameters plus warnings (unknown keys with line numbers).
/// Frequencies may be given as `f*_hz` or `omega*_rad_s`; the cavity leak as
/// `kappa_rad_s` or `kappa_over_omega1`; the Coulomb coupling either directly
/// (`coulomb_lambda`) or via `charge1_C`, `charge2_C`, `r0_m`.
pub fn derive_parameters(map: &ConfigMap) -> Result<(SystemParams, Vec<String>), ParamError> {
    let consts = PhysicalConstants::default();
    let reader = KeyReader { map };
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut warnings: Vec<String> = map
        .entries
        .iter()
        .filter(|e| !is_known_key(&e.key))
        .map(|e| format!("unknown config key `{}` on line {} (ignored)", e.key, e.line))
        .collect();

    let lambda_pump = reader.required_positive("lambda_pump_m")?;
    let cavity_len = reader.required_positive("L_m")?;
    let omega1 = reader.one_of_positive("f1_hz", two_pi, "omega1_rad_s")?;
    let omega2 = reader.one_of_positive("f2_hz", two_pi, "omega2_rad_s")?;
    let m1 = reader.required_positive("m1_kg")?;
    let m2 = reader.required_positive("m2_kg")?;
    let quality1 = reader.required_positive_or_inf("Q1")?;
    let quality2 = reader.required_positive_or_inf("Q2")?;
    let kappa = reader.one_of_positive("kappa_rad_s", 1.0, "kappa_over_omega1")?;
    // kappa_over_omega1 is a ratio; rescale when that key was the one present.
    let kappa = if reader.raw("kappa_rad_s").is_some() {
        kappa
    } else {
        kappa * omega1
    };
    let power = reader.required_non_negative("power_W")?;
    let temperature = reader.required_non_negative("temperature_K")?;

    let r0 = match reader.number("r0_m")? {
        None => None,
        Some((v, line)) => {
            if v <= 0.0 {
                return Err(ParamError::NonPositive {
                    key: "r0_m".to_string(),
                    value: v,
                    line,
                });
            }
            Some(v)
        }
    };

    let coulomb_lambda = match (
        reader.number("coulomb_lambda")?,
        reader.number("charge1_C")?,
        reader.number("charge2_C")?,
    ) {
        // Direct value wins over the charge route when both are present.
        (Some((v, line)), Some(_), _) | (Some((v, line)), _, Some(_)) => {
            warnings.push(format!(
                "both coulomb_lambda (line {line}) and charge keys given; using coulomb_lambda"
            ));
            v
        }
        (Some((v, _)), None, None) => v,
        (None, Some((q1, _)), Some((q2, _))) => {
            let r0 = r0.ok_or_else(|| ParamError::MissingKey("r0_m".to_string()))?;
            coulomb_strength_with(q1, q2, r0, &consts)?
        }
        (None, Some(_), None) => return Err(ParamError::MissingKey("charge2_C".to_string())),
        (None, None, Some(_)) => return Err(ParamError::MissingKey("charge1_C".to_string())),
        (None, None, None) => {
            return Err(ParamError::MissingKey(
                "coulomb_lambda (or charge1_C/charge2_C/r0_m)".to_string(),
            ))
        }
    };

    let epsilon_convention = match reader.raw("epsilon_convention") {
        None => EpsilonConvention::WithHbar,
        Some(e) => match e.value.as_str() {
            "with_hbar" => EpsilonConvention::WithHbar,
            "paper_verbatim" => EpsilonConvention::PaperVerbatim,
            other => {
                return Err(ParamError::BadEnum {
                    key: "epsilon_convention".to_string(),
                    value: other.to_string(),
                    line: e.line,
                    expected: "with_hbar, paper_verbatim",
                })
            }
        },
    };

    let detuning_mode = match reader.raw("detuning_mode") {
        None => DetuningMode::FixEffective,
        Some(e) => match e.value.as_str() {
            "fix_effective" => DetuningMode::FixEffective,
            "fix_bare" => DetuningMode::FixBare,
            other => {
                return Err(ParamError::BadEnum {
                    key: "detuning_mode".to_string(),
                    value: other.to_string(),
                    line: e.line,
                    expected: "fix_effective, fix_bare",
                })
            }
        },
    };

    // Default operating point: pump one mechanical frequency below resonance.
    let detuning_value = match reader.number("detuning_value_rad_s")? {
        Some((v, _)) => v,
        None => omega1,
    };

    let pulse = match (
        reader.number("pulse_center_rad_s")?,
        reader.number("pulse_fwhm_rad_s")?,
    ) {
        (None, None) => None,
        (Some(_), None) => return Err(ParamError::MissingKey("pulse_fwhm_rad_s".to_string())),
        (None, Some(_)) => return Err(ParamError::MissingKey("pulse_center_rad_s".to_string())),
        (Some((center, _)), Some((fwhm, line))) => {
            if fwhm <= 0.0 {
                return Err(ParamError::NonPositive {
                    key: "pulse_fwhm_rad_s".to_string(),
                    value: fwhm,
                    line,
                });
            }
            Some(PulseProfile { center, fwhm })
        }
    };

    let routing_threshold = match reader.number("routing_threshold")? {
        None => DEFAULT_ROUTING_THRESHOLD,
        Some((v, line)) => {
            if v <= 0.0 || v > 1.0 {
                return Err(ParamError::NonPositive {
                    key: "routing_threshold".to_string(),
                    value: v,
                    line,
                });
            }
            v
        }
    };
    let noise_ceiling = match reader.number("noise_ceiling")? {
        None => DEFAULT_NOISE_CEILING,
        Some((v, line)) => {
            if v <= 0.0 {
                return Err(ParamError::NonPositive {
                    key: "noise_ceiling".to_string(),
                    value: v,
                    line,
                });
            }
            v
        }
    };

    let gamma1 = omega1 / quality1;
    let gamma2 = omega2 / quality2;
    let omega_c = two_pi * consts.c / lambda_pump;
    // The nominal detuning (target or bare, both ~omega1 << omega_c) fixes the
    // pump frequency; the distinction shifts eps_l at the 1e-9 level.
    let omega_l = omega_c - detuning_value;
    let g = omega_c / cavity_len;
    let eps_l = match epsilon_convention {
        EpsilonConvention::WithHbar => (2.0 * kappa * power / (consts.hbar * omega_l)).sqrt(),
        EpsilonConvention::PaperVerbatim => (2.0 * kappa * power / omega_l).sqrt(),
    };

    if omega_l <= 0.0 {
        warnings.push(format!(
            "pump frequency omega_l = {omega_l:e} rad/s is not positive; check detuning_value_rad_s"
        ));
    }

    let params = SystemParams {
        lambda_pump,
        cavity_len,
        omega1,
        omega2,
        m1,
        m2,
        quality1,
        quality2,
        gamma1,
        gamma2,
        kappa,
        power,
        temperature,
        coulomb_lambda,
        omega_c,
        omega_l,
        g,
        eps_l,
        epsilon_convention,
        detuning_mode,
        detuning_value,
        r0,
        pulse,
        routing_threshold,
        noise_ceiling,
        constants: consts,
    };
    Ok((params, warnings))
}

/// Sideband ratio at or above which the system counts as resolved-sideband.
pub const RESOLVED_SIDEBAND_MIN_RATIO: f64 = 10.0;
/// Relative detuning offset below which the pump counts as red-detuned on the
/// first mechanical sideband.
pub const RED_DETUNED_MAX_OFFSET: f64 = 0.1;
/// Displacement-to-separation ratio below which the linearized Coulomb
/// coupling is trusted.
pub const SMALL_DISPLACEMENT_MAX_RATIO: f64 = 1e-2;

/// Check the operating regime. `delta` is the effective detuning of the
/// selected branch and `q1s` its steady mirror displacement; pass what is
/// known (both are `None` before a steady-state solve).
pub fn validate_regime(
    params: &SystemParams,
    delta: Option<f64>,
    q1s: Option<f64>,
) -> RegimeReport {
    let mut warnings = Vec::new();

    let sideband_ratio = params.omega1 / params.kappa;
    // The nominal operating point sits exactly at ratio 10; don't let one ulp
    // of rounding in kappa = omega1/10 flip the flag.
    let resolved_sideband = sideband_ratio >= RESOLVED_SIDEBAND_MIN_RATIO * (1.0 - 1e-12);
    if !resolved_sideband {
        warnings.push(format!(
            "not sideband-resolved: omega1/kappa = {sideband_ratio:.3} < {RESOLVED_SIDEBAND_MIN_RATIO}"
        ));
    }

    let detuning_offset = delta.map(|d| (d - params.omega1).abs() / params.omega1);
    let red_detuned = detuning_offset.map(|off| off <= RED_DETUNED_MAX_OFFSET);
    if let (Some(off), Some(false)) = (detuning_offset, red_detuned) {
        warnings.push(format!(
            "pump not on the red mechanical sideband: |Delta - omega1|/omega1 = {off:.3}"
        ));
    }

    let displacement_ratio = match (q1s, params.r0) {
        (Some(q), Some(r0)) => Some(q.abs() / r0),
        _ => None,
    };
    let small_displacement = displacement_ratio.map(|r| r < SMALL_DISPLACEMENT_MAX_RATIO);
    if let (Some(r), Some(false)) = (displacement_ratio, small_displacement) {
        warnings.push(format!(
            "steady displacement is not small against the separation: q1s/r0 = {r:.3e}"
        ));
    }

    RegimeReport {
        sideband_ratio,
        resolved_sideband,
        detuning_offset,
        red_detuned,
        displacement_ratio,
        small_displacement,
        warnings,
    }
}

impl SystemParams {
    /// Effective static stiffness of the mirror once the resonator is
    /// adiabatically eliminated: `K = m1 omega1^2 - (hbar lambda)^2 / (m2 omega2^2)`
    /// (N/m). Goes to zero when the Coulomb coupling destabilizes the pair.
    pub fn effective_stiffness(&self) -> f64 {
        let hl = self.constants.hbar * self.coulomb_lambda;
        self.m1 * self.omega1 * self.omega1 - hl * hl / (self.m2 * self.omega2 * self.omega2)
    }

    /// Zero-point length of the middle mirror, `sqrt(hbar/(m1 omega1))` (m);
    /// the internal position unit.
    pub fn zero_point_length(&self) -> f64 {
        (self.constants.hbar / (self.m1 * self.omega1)).sqrt()
    }

    /// Internal rescaled view of the parameters; see [`Scaled`].
    pub(crate) fn scaled(&self) -> Scaled {
        let w = self.omega1;
        let len = self.zero_point_length();
        Scaled {
            omega1: 1.0,
            omega2: self.omega2 / w,
            kappa: self.kappa / w,
            gamma1: self.gamma1 / w,
            gamma2: self.gamma2 / w,
            m1: 1.0,
            m2: self.m2 / self.m1,
            g: self.g * len / w,
            lambda: self.coulomb_lambda * len * len / w,
            eps_l: self.eps_l / w,
            w_scale: w,
            len_scale: len,
            mass_scale: self.m1,
        }
    }

    /// Order-insensitive 64-bit fingerprint of the physical fields, used to
    /// tag spectra with the parameters that generated them.
    pub fn digest(&self) -> u64 {
        let fields = [
            self.lambda_pump,
            self.cavity_len,
            self.omega1,
            self.omega2,
            self.m1,
            self.m2,
            self.quality1,
            self.quality2,
            self.kappa,
            self.power,
            self.temperature,
            self.coulomb_lambda,
            self.eps_l,
            self.detuning_value,
            self.pulse.map_or(0.0, |p| p.center),
            self.pulse.map_or(0.0, |p| p.fwhm),
            match self.epsilon_convention {
                EpsilonConvention::WithHbar => 1.0,
                EpsilonConvention::PaperVerbatim => 2.0,
            },
            match self.detuning_mode {
                DetuningMode::FixEffective => 1.0,
                DetuningMode::FixBare => 2.0,
            },
        ];
        // FNV-1a over the IEEE bit patterns: stable, dependency-free.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for v in fields {
            for byte in v.to_bits().to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}

/// Parameters in the internal unit system: frequencies in units of `omega1`,
/// masses in units of `m1`, lengths in units of the mirror zero-point length.
/// In these units `hbar = 1`, so every formula below drops it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scaled {
    pub omega1: f64,
    pub omega2: f64,
    pub kappa: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub m1: f64,
    pub m2: f64,
    pub g: f64,
    pub lambda: f64,
    pub eps_l: f64,
    /// SI value of the internal frequency unit (rad/s).
    pub w_scale: f64,
    /// SI value of the internal length unit (m).
    pub len_scale: f64,
    /// SI value of the internal mass unit (kg).
    pub mass_scale: f64,
}

impl Scaled {
    /// Effective static stiffness in internal units,
    /// `K = m1 omega1^2 - lambda^2/(m2 omega2^2)` with `hbar = 1`.
    pub fn effective_stiffness(&self) -> f64 {
        self.m1 * self.omega1 * self.omega1
            - self.lambda * self.lambda / (self.m2 * self.omega2 * self.omega2)
    }
}
