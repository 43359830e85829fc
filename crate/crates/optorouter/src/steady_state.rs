//! Classical steady state of the driven cavity + coupled mechanics.
//!
//! Setting the time derivatives in the Langevin equations to zero gives
//!
//! ```text
//! c_s  = eps_l / (2 kappa + i Delta)
//! q1s  = hbar g |c_s|^2 / K,      K = m1 omega1^2 - (hbar lambda)^2/(m2 omega2^2)
//! q2s  = -hbar lambda q1s / (m2 omega2^2)
//! Delta = Delta_c - g q1s
//! ```
//!
//! Eliminating everything but the effective detuning turns the last relation
//! into a monic cubic in `Delta`, so the cavity can be mono- or bistable. All
//! roots are found in closed form (Cardano / trigonometric branch) and then
//! polished with one or two Newton steps; each branch is classified as
//! dynamically stable or unstable from the eigenvalues of the 6x6 drift matrix
//! of the linearized dynamics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::params::{Scaled, SystemParams};

/// One self-consistent operating point of the cavity. All fields SI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    /// Intracavity field amplitude (dimensionless, |c_s|^2 = photon number).
    pub c_s: Complex64,
    /// Mean intracavity photon number |c_s|^2.
    pub n_cav: f64,
    /// Steady displacement of the middle mirror (m).
    pub q1s: f64,
    /// Steady displacement of the external resonator (m).
    pub q2s: f64,
    /// Mean momenta — identically zero in steady state; kept so the record is
    /// the complete phase-space point.
    pub p1s: f64,
    pub p2s: f64,
    /// Effective detuning Delta = Delta_c - g q1s (rad/s).
    pub delta: f64,
    /// Bare pump–cavity detuning Delta_c (rad/s).
    pub delta_c: f64,
    /// Position of this branch in the set, after sorting by `delta`.
    pub branch_index: usize,
    /// Whether the linearized dynamics around this point decay (all drift
    /// eigenvalues in the left half-plane).
    pub stable: bool,
}

/// All steady-state branches at one bare detuning, sorted by effective
/// detuning (ascending). Length is 1, 2 (degenerate boundary), or 3.
#[derive(Debug, Clone, Serialize)]
pub struct BranchSet {
    /// Bare detuning the branches were solved at (rad/s).
    pub delta_c: f64,
    pub branches: Vec<SteadyState>,
    /// More than one coexisting branch (optical bistability).
    pub bistable: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SteadyStateError {
    #[error("effective static stiffness K = {stiffness:.6e} N/m is not positive; the Coulomb coupling overwhelms the mirror restoring force")]
    DegenerateStiffness { stiffness: f64 },
    #[error("steady-state cubic did not converge: residual {residual:.3e} at Delta = {delta:.6e} rad/s")]
    SolverFailure { delta: f64, residual: f64 },
    #[error("no dynamically stable steady-state branch at bare detuning {delta_c:.6e} rad/s")]
    NoStableBranch { delta_c: f64 },
}

/// Largest admissible real part (internal units, omega1 = 1) for a drift
/// eigenvalue of a branch still counted as stable. Stable branches sit at
/// least a mechanical half-linewidth (~1e-7) into the left half-plane, so a
/// zero threshold with this much slack is unambiguous.
const STABILITY_TOL: f64 = 1e-10;

/// Relative residual above which the polished cubic root is rejected.
const CUBIC_RESIDUAL_TOL: f64 = 1e-8;

/// Roots of the monic cubic `x^3 + a x^2 + b x + c` (real coefficients,
/// real roots only). Returns 1 or 3 entries; a double root on the
/// discriminant boundary comes back as two nearly equal entries of the
/// three-root branch.
fn monic_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    // Depress: x = t - a/3  =>  t^3 + p t + q = 0.
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;

    let disc = 0.25 * q * q + p * p * p / 27.0;
    if disc > 0.0 {
        // One real root. Pick the large-magnitude cube root first to avoid
        // cancellation, then recover its partner from t*v = -p/3.
        let s = disc.sqrt();
        let u = if q <= 0.0 { -0.5 * q + s } else { -0.5 * q - s };
        let t = u.cbrt();
        let root = if t == 0.0 { 0.0 } else { t - p / (3.0 * t) };
        vec![root + shift]
    } else {
        // Three real roots (p <= 0 here).
        let m = 2.0 * (-p / 3.0).sqrt();
        if m == 0.0 {
            return vec![shift]; // triple root
        }
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect()
    }
}

/// One steady-state solve in internal units. `delta_c` in units of omega1.
fn solve_internal(s: &Scaled, delta_c: f64) -> Result<Vec<(f64, Complex64)>, SteadyStateError> {
    let stiffness = s.effective_stiffness();
    if stiffness <= 0.0 {
        // Report in SI so the message is meaningful outside the solver.
        let si = stiffness * s.mass_scale * s.w_scale * s.w_scale;
        return Err(SteadyStateError::DegenerateStiffness { stiffness: si });
    }

    let four_k2 = 4.0 * s.kappa * s.kappa;
    // Radiation-pressure feedback strength (units of omega1^3): the cubic's
    // only inhomogeneous term.
    let feedback = s.g * s.g * s.eps_l * s.eps_l / stiffness;

    // Delta^3 - Delta_c Delta^2 + 4 kappa^2 Delta + (feedback - 4 kappa^2 Delta_c) = 0
    let a = -delta_c;
    let b = four_k2;
    let c = feedback - four_k2 * delta_c;

    let mut roots = monic_cubic_roots(a, b, c);

    // Newton polish: the closed forms are accurate to ~1e-14 already, one or
    // two steps pin the residual at machine level.
    let f = |x: f64| ((x + a) * x + b) * x + c;
    let fp = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    let scale = [1.0, a.abs(), b.abs(), c.abs()]
        .into_iter()
        .fold(f64::NAN, f64::max);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = fp(*r);
            if d == 0.0 {
                break;
            }
            let step = f(*r) / d;
            if step == 0.0 {
                break;
            }
            *r -= step;
        }
        let residual = f(*r).abs() / scale;
        if !r.is_finite() || residual > CUBIC_RESIDUAL_TOL {
            return Err(SteadyStateError::SolverFailure {
                delta: *r * s.w_scale,
                residual,
            });
        }
    }

    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs())));

    Ok(roots
        .into_iter()
        .map(|delta| {
            let c_s = Complex64::new(s.eps_l, 0.0) / Complex64::new(2.0 * s.kappa, delta);
            (delta, c_s)
        })
        .collect())
}

/// Drift matrix of the linearized dynamics in internal units, basis
/// `(dq1, dp1, dq2, dp2, Re dc, Im dc)`. `delta` and `c_s` belong to the
/// branch being tested.
pub(crate) fn drift_matrix(s: &Scaled, delta: f64, c_s: Complex64) -> DMatrix<f64> {
    let (ar, ai) = (c_s.re, c_s.im);
    let k1 = s.m1 * s.omega1 * s.omega1;
    let k2 = s.m2 * s.omega2 * s.omega2;
    DMatrix::from_row_slice(
        6,
        6,
        &[
            0.0,        1.0 / s.m1, 0.0,      0.0,        0.0,          0.0,
            -k1,        -s.gamma1,  -s.lambda, 0.0,       2.0 * s.g * ar, 2.0 * s.g * ai,
            0.0,        0.0,        0.0,      1.0 / s.m2, 0.0,          0.0,
            -s.lambda,  0.0,        -k2,      -s.gamma2,  0.0,          0.0,
            -s.g * ai,  0.0,        0.0,      0.0,        -2.0 * s.kappa, delta,
            s.g * ar,   0.0,        0.0,      0.0,        -delta,       -2.0 * s.kappa,
        ],
    )
}

fn branch_is_stable(s: &Scaled, delta: f64, c_s: Complex64) -> bool {
    let m = drift_matrix(s, delta, c_s);
    m.complex_eigenvalues()
        .iter()
        .all(|ev| ev.re < STABILITY_TOL)
}

/// Solve every steady-state branch at the bare detuning `delta_c` (rad/s).
pub fn solve_branches(
    params: &SystemParams,
    delta_c: f64,
) -> Result<BranchSet, SteadyStateError> {
    let s = params.scaled();
    let internal = solve_internal(&s, delta_c / s.w_scale)?;
    let stiffness = s.effective_stiffness();
    let k2 = s.m2 * s.omega2 * s.omega2;

    let branches = internal
        .into_iter()
        .enumerate()
        .map(|(branch_index, (delta, c_s))| {
            let n_cav = c_s.norm_sqr();
            // hbar = 1 internally; SI lengths recovered through len_scale.
            let q1s = s.g * n_cav / stiffness;
            let q2s = -s.lambda * q1s / k2;
            SteadyState {
                c_s,
                n_cav,
                q1s: q1s * s.len_scale,
                q2s: q2s * s.len_scale,
                p1s: 0.0,
                p2s: 0.0,
                delta: delta * s.w_scale,
                delta_c,
                branch_index,
                stable: branch_is_stable(&s, delta, c_s),
            }
        })
        .collect::<Vec<_>>();

    let bistable = branches.len() > 1;
    Ok(BranchSet {
        delta_c,
        branches,
        bistable,
    })
}

/// Pick the branch the router operates on: the stable branch with the
/// smallest |Delta| (ties broken toward lower index). Errors when every
/// branch is unstable.
pub fn select_operating_branch(set: &BranchSet) -> Result<&SteadyState, SteadyStateError> {
    set.branches
        .iter()
        .filter(|b| b.stable)
        .min_by(|x, y| {
            x.delta
                .abs()
                .partial_cmp(&y.delta.abs())
                .unwrap()
                .then(x.branch_index.cmp(&y.branch_index))
        })
        .ok_or(SteadyStateError::NoStableBranch {
            delta_c: set.delta_c,
        })
}

/// Bare detuning that makes `delta_target` an exact steady-state root:
/// `Delta_c = Delta_t + g * q1s(Delta_t)` with the displacement evaluated at
/// the target. Closed form — no iteration is involved.
pub fn detuning_for_target(
    params: &SystemParams,
    delta_target: f64,
) -> Result<f64, SteadyStateError> {
    let s = params.scaled();
    let stiffness = s.effective_stiffness();
    if stiffness <= 0.0 {
        let si = stiffness * s.mass_scale * s.w_scale * s.w_scale;
        return Err(SteadyStateError::DegenerateStiffness { stiffness: si });
    }
    let dt = delta_target / s.w_scale;
    let n = s.eps_l * s.eps_l / (4.0 * s.kappa * s.kappa + dt * dt);
    let pull = s.g * s.g * n / stiffness;
    Ok((dt + pull) * s.w_scale)
}

/// Solve the operating point the parameters describe: in `FixEffective` mode
/// the bare detuning is derived so the target effective detuning is a root
/// and that branch is returned; in `FixBare` mode the branches at the given
/// bare detuning are solved and the operating branch selected.
pub fn solve_operating(params: &SystemParams) -> Result<SteadyState, SteadyStateError> {
    match params.detuning_mode {
        crate::params::DetuningMode::FixEffective => {
            let target = params.detuning_value;
            let delta_c = detuning_for_target(params, target)?;
            let set = solve_branches(params, delta_c)?;
            // The target is an exact root; find it (others may coexist when
            // the cavity is bistable at this drive).
            let hit = set
                .branches
                .iter()
                .min_by(|x, y| {
                    (x.delta - target)
                        .abs()
                        .partial_cmp(&(y.delta - target).abs())
                        .unwrap()
                })
                .expect("cubic always has at least one real root");
            let tol = 1e-9 * (target.abs() + params.omega1);
            if (hit.delta - target).abs() > tol {
                return Err(SteadyStateError::SolverFailure {
                    delta: hit.delta,
                    residual: (hit.delta - target).abs() / params.omega1,
                });
            }
            if !hit.stable {
                return Err(SteadyStateError::NoStableBranch { delta_c });
            }
            Ok(hit.clone())
        }
        crate::params::DetuningMode::FixBare => {
            let set = solve_branches(params, params.detuning_value)?;
            select_operating_branch(&set).cloned()
        }
    }
}
