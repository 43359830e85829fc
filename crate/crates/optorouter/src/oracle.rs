//! Ground-truth frequency-domain solver.
//!
//! Instead of trusting any closed-form expression, this module assembles the
//! linearized equations of motion as a 4×4 complex linear system per
//! frequency — unknowns `[δc(ω), δc‡(ω), δq1(ω), δq2(ω)]`, with the mechanical
//! momenta eliminated analytically through the susceptibilities
//! `χτ⁻¹(ω) = mτ(ωτ² − ω² − iγτω)` — and solves it by partial-pivoted
//! elimination. The rows are written straight from the equations of motion:
//!
//! ```text
//! (2κ + i(Δ−ω))·δc  − i g c_s·δq1              = √(2κ)(c_in + d_in)
//! (2κ − i(Δ+ω))·δc‡ + i g c_s*·δq1             = √(2κ)(c_in‡ + d_in‡)
//! −g c_s*·δc − g c_s·δc‡ + χ1⁻¹·δq1 + λ·δq2   = ξ1
//!                          λ·δq1   + χ2⁻¹·δq2  = ξ2
//! ```
//!
//! (internal rescaled units, ħ = 1). Crucially, nothing here reads the
//! closed-form transfer functions in [`crate::response`]; the two paths share
//! only parameter plumbing, so their agreement is a genuine cross-check of
//! the hand algebra. [`compare_modes`] quantifies that agreement — and the
//! disagreement of the verbatim-transcription mode — over a frequency grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::params::SystemParams;
use crate::response::{ResponseError, ResponseMode, ResponseSet};
use crate::steady_state::SteadyState;

/// |det| below this (internal units) is treated as a singular system.
const SINGULAR_DET_TOL: f64 = 1e-30;

/// The six input channels driving the fluctuations. The right-moving and
/// left-moving probe fields enter the cavity row identically, so `DIn`
/// duplicates `CIn` (and likewise their conjugates) by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputChannel {
    /// Left-port probe field.
    CIn,
    /// Conjugate of the left-port probe.
    CInDagger,
    /// Right-port probe field.
    DIn,
    /// Conjugate of the right-port probe.
    DInDagger,
    /// Thermal Langevin force on the middle mirror.
    Xi1,
    /// Thermal Langevin force on the external resonator.
    Xi2,
}

impl InputChannel {
    pub const ALL: [InputChannel; 6] = [
        InputChannel::CIn,
        InputChannel::CInDagger,
        InputChannel::DIn,
        InputChannel::DInDagger,
        InputChannel::Xi1,
        InputChannel::Xi2,
    ];

    fn index(self) -> usize {
        match self {
            InputChannel::CIn => 0,
            InputChannel::CInDagger => 1,
            InputChannel::DIn => 2,
            InputChannel::DInDagger => 3,
            InputChannel::Xi1 => 4,
            InputChannel::Xi2 => 5,
        }
    }
}

/// The assembled system at one frequency. Rows are, in order: cavity,
/// conjugate cavity, mirror mechanics, resonator mechanics; everything in the
/// internal rescaled units.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    /// Evaluation frequency (SI rad/s; kept for diagnostics).
    pub omega: f64,
    /// 4×4 coefficient matrix over `[δc, δc‡, δq1, δq2]`.
    pub matrix: [[Complex64; 4]; 4],
    /// Forcing vector per input channel, indexed per [`InputChannel::ALL`].
    pub input_columns: [[Complex64; 4]; 6],
}

impl LinearSystem {
    /// The forcing vector of one input channel.
    pub fn forcing(&self, channel: InputChannel) -> [Complex64; 4] {
        self.input_columns[channel.index()]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("linear system is singular at omega = {omega:.6e} rad/s")]
    SingularMatrix { omega: f64 },
}

/// Build the linear system at `omega` (SI rad/s). Total for any valid
/// parameter set; negative and zero frequencies are legitimate inputs.
pub fn assemble(params: &SystemParams, ss: &SteadyState, omega: f64) -> LinearSystem {
    let s = params.scaled();
    let w = omega / s.w_scale;
    let delta = ss.delta / s.w_scale;
    let c_s = ss.c_s;
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);

    let chi1_inv = s.m1
        * Complex64::new(s.omega1 * s.omega1 - w * w, -s.gamma1 * w);
    let chi2_inv = s.m2
        * Complex64::new(s.omega2 * s.omega2 - w * w, -s.gamma2 * w);

    let matrix = [
        [
            Complex64::new(2.0 * s.kappa, delta - w),
            zero,
            -i * s.g * c_s,
            zero,
        ],
        [
            zero,
            Complex64::new(2.0 * s.kappa, -(delta + w)),
            i * s.g * c_s.conj(),
            zero,
        ],
        [
            -s.g * c_s.conj(),
            -s.g * c_s,
            chi1_inv,
            Complex64::new(s.lambda, 0.0),
        ],
        [zero, zero, Complex64::new(s.lambda, 0.0), chi2_inv],
    ];

    let sqrt2k = Complex64::new((2.0 * s.kappa).sqrt(), 0.0);
    let one = Complex64::new(1.0, 0.0);
    let probe = [sqrt2k, zero, zero, zero];
    let probe_conj = [zero, sqrt2k, zero, zero];
    let force1 = [zero, zero, one, zero];
    let force2 = [zero, zero, zero, one];

    LinearSystem {
        omega,
        matrix,
        // Order per InputChannel::ALL; the two probe ports share forcings.
        input_columns: [probe, probe_conj, probe, probe_conj, force1, force2],
    }
}

/// LU factorization with partial pivoting; `perm[i]` is the original row now
/// in position `i`, `det` includes the permutation sign.
struct Factored {
    lu: [[Complex64; 4]; 4],
    perm: [usize; 4],
    det: Complex64,
}

// Triangular index arithmetic; iterator rewrites obscure the pivoting.
#[allow(clippy::needless_range_loop)]
fn factor(matrix: &[[Complex64; 4]; 4], omega: f64) -> Result<Factored, OracleError> {
    let mut lu = *matrix;
    let mut perm = [0usize, 1, 2, 3];
    let mut sign = 1.0f64;
    for k in 0..4 {
        let mut p = k;
        let mut best = lu[k][k].norm_sqr();
        for r in (k + 1)..4 {
            let cand = lu[r][k].norm_sqr();
            if cand > best {
                best = cand;
                p = r;
            }
        }
        if best == 0.0 {
            return Err(OracleError::SingularMatrix { omega });
        }
        if p != k {
            lu.swap(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        let pivot = lu[k][k];
        for r in (k + 1)..4 {
            let m = lu[r][k] / pivot;
            lu[r][k] = m;
            for c in (k + 1)..4 {
                let delta = m * lu[k][c];
                lu[r][c] -= delta;
            }
        }
    }
    let det = lu[0][0] * lu[1][1] * lu[2][2] * lu[3][3] * sign;
    if det.norm_sqr() < SINGULAR_DET_TOL * SINGULAR_DET_TOL {
        return Err(OracleError::SingularMatrix { omega });
    }
    Ok(Factored { lu, perm, det })
}

impl Factored {
    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &[Complex64; 4]) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        let mut y = [zero; 4];
        for i in 0..4 {
            let mut acc = rhs[self.perm[i]];
            for j in 0..i {
                acc -= self.lu[i][j] * y[j];
            }
            y[i] = acc;
        }
        let mut x = [zero; 4];
        for i in (0..4).rev() {
            let mut acc = y[i];
            for j in (i + 1)..4 {
                acc -= self.lu[i][j] * x[j];
            }
            x[i] = acc / self.lu[i][i];
        }
        x
    }
}

/// Transfer coefficients in internal units, plus the system determinant.
pub(crate) struct LinearResponse {
    pub e: Complex64,
    pub f: Complex64,
    pub v1: Complex64,
    pub v2: Complex64,
    pub det: Complex64,
}

/// Solve one assembled system for the four distinct forcings.
pub(crate) fn solve_scaled(system: &LinearSystem) -> Result<LinearResponse, OracleError> {
    let fac = factor(&system.matrix, system.omega)?;
    let e = fac.solve(&system.forcing(InputChannel::CIn))[0];
    let f = fac.solve(&system.forcing(InputChannel::CInDagger))[0];
    let v1 = fac.solve(&system.forcing(InputChannel::Xi1))[0];
    let v2 = fac.solve(&system.forcing(InputChannel::Xi2))[0];
    Ok(LinearResponse {
        e,
        f,
        v1,
        v2,
        det: fac.det,
    })
}

/// Assemble and solve at `omega` (SI rad/s), returning SI-converted transfer
/// coefficients with `source = Oracle`. The reported `d` is the system
/// determinant, which coincides analytically with the closed-form
/// denominator when the coupling is on.
pub fn solve_response(
    params: &SystemParams,
    ss: &SteadyState,
    omega: f64,
) -> Result<ResponseSet, OracleError> {
    let sys = assemble(params, ss, omega);
    let raw = solve_scaled(&sys)?;
    let e_to_si = 1.0 / params.omega1.sqrt();
    let v_to_si =
        1.0 / (params.m1 * params.omega1 * params.omega1 * params.zero_point_length());
    Ok(ResponseSet {
        omega,
        e: raw.e * e_to_si,
        f: raw.f * e_to_si,
        v1: raw.v1 * v_to_si,
        v2: raw.v2 * v_to_si,
        d: raw.det,
        source: ResponseMode::Oracle,
    })
}

/// Largest relative deviation of one coefficient over a grid, with the
/// frequency where it occurred.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoefficientDeviation {
    pub max_rel: f64,
    /// Frequency of the worst deviation (rad/s); NaN for an empty grid.
    pub at_omega: f64,
}

/// Per-coefficient deviations between two evaluation modes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairReport {
    pub e: CoefficientDeviation,
    pub f: CoefficientDeviation,
    pub v1: CoefficientDeviation,
    pub v2: CoefficientDeviation,
}

impl PairReport {
    /// The worst deviation across all four coefficients.
    pub fn worst(&self) -> f64 {
        self.e
            .max_rel
            .max(self.f.max_rel)
            .max(self.v1.max_rel)
            .max(self.v2.max_rel)
    }
}

/// Pairwise deviations between the three evaluation modes over one grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscrepancyReport {
    pub paper_vs_rederived: PairReport,
    pub paper_vs_oracle: PairReport,
    pub rederived_vs_oracle: PairReport,
}

impl DiscrepancyReport {
    /// The figure the verification gate is judged on.
    pub fn worst_rederived_vs_oracle(&self) -> f64 {
        self.rederived_vs_oracle.worst()
    }
}

/// Relative deviation `|a − b| / max(|a|, |b|)`; two exact zeros deviate by 0.
pub(crate) fn relative_deviation(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Deviations between two equally-long response sequences over the same grid.
pub fn pair_deviation(a: &[ResponseSet], b: &[ResponseSet]) -> PairReport {
    let start = a.first().map_or(f64::NAN, |r| r.omega);
    let mut rep = PairReport {
        e: CoefficientDeviation { max_rel: 0.0, at_omega: start },
        f: CoefficientDeviation { max_rel: 0.0, at_omega: start },
        v1: CoefficientDeviation { max_rel: 0.0, at_omega: start },
        v2: CoefficientDeviation { max_rel: 0.0, at_omega: start },
    };
    for (x, y) in a.iter().zip(b.iter()) {
        let slots = [
            (&mut rep.e, relative_deviation(x.e, y.e)),
            (&mut rep.f, relative_deviation(x.f, y.f)),
            (&mut rep.v1, relative_deviation(x.v1, y.v1)),
            (&mut rep.v2, relative_deviation(x.v2, y.v2)),
        ];
        for (slot, dev) in slots {
            if dev > slot.max_rel {
                slot.max_rel = dev;
                slot.at_omega = x.omega;
            }
        }
    }
    rep
}

/// Evaluate all three modes over `grid` (SI rad/s, nonempty) and report every
/// pairwise deviation. The rederived-vs-oracle entry is the verification
/// gate; the verbatim-transcription entries are documentation, not a target.
pub fn compare_modes(
    params: &SystemParams,
    ss: &SteadyState,
    grid: &[f64],
) -> Result<DiscrepancyReport, ResponseError> {
    if grid.is_empty() {
        return Err(ResponseError::BadGrid {
            reason: "empty frequency grid for mode comparison".to_string(),
        });
    }
    let evaluated: Vec<Result<[ResponseSet; 3], ResponseError>> = grid
        .par_iter()
        .map(|&omega| {
            let paper =
                crate::response::transfer_functions(params, ss, omega, ResponseMode::PaperVerbatim)?;
            let rederived =
                crate::response::transfer_functions(params, ss, omega, ResponseMode::Rederived)?;
            let oracle =
                crate::response::transfer_functions(params, ss, omega, ResponseMode::Oracle)?;
            Ok([paper, rederived, oracle])
        })
        .collect();

    let mut paper = Vec::with_capacity(grid.len());
    let mut rederived = Vec::with_capacity(grid.len());
    let mut oracle = Vec::with_capacity(grid.len());
    for item in evaluated {
        let [p, r, o] = item?;
        paper.push(p);
        rederived.push(r);
        oracle.push(o);
    }

    Ok(DiscrepancyReport {
        paper_vs_rederived: pair_deviation(&paper, &rederived),
        paper_vs_oracle: pair_deviation(&paper, &oracle),
        rederived_vs_oracle: pair_deviation(&rederived, &oracle),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_parameters, ConfigMap};
    use crate::response::{transfer_functions, FrequencyGrid};
    use crate::steady_state::solve_operating;
    use nalgebra::{Matrix4, Vector4};

    fn fig2(pairs: &[(&str, &str)]) -> (SystemParams, SteadyState) {
        let mut base = vec![
            ("lambda_pump_m", "1054e-9".to_string()),
            ("L_m", "0.067".to_string()),
            ("f1_hz", "134e3".to_string()),
            ("f2_hz", "134e3".to_string()),
            ("m1_kg", "4e-11".to_string()),
            ("m2_kg", "4e-11".to_string()),
            ("Q1", "1.1e6".to_string()),
            ("Q2", "1.1e6".to_string()),
            ("kappa_over_omega1", "0.1".to_string()),
            ("power_W", "2e-6".to_string()),
            ("temperature_K", "0.02".to_string()),
            ("coulomb_lambda", "3e33".to_string()),
        ];
        for (k, v) in pairs {
            if let Some(e) = base.iter_mut().find(|(bk, _)| bk == k) {
                e.1 = v.to_string();
            } else {
                base.push((k, v.to_string()));
            }
        }
        let map = ConfigMap::from_pairs(base);
        let p = derive_parameters(&map).unwrap().0;
        let ss = solve_operating(&p).unwrap();
        (p, ss)
    }

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn assembly_structure_and_channel_duplication() {
        let (p, ss) = fig2(&[]);
        let sys = assemble(&p, &ss, 1.03 * p.omega1);
        // Sparsity pattern of the equations of motion.
        for (r, c) in [(0, 1), (0, 3), (1, 0), (1, 3), (3, 0), (3, 1)] {
            assert_eq!(sys.matrix[r][c], zero(), "entry ({r},{c}) should vanish");
        }
        // Both probe ports force the cavity identically.
        assert_eq!(sys.forcing(InputChannel::DIn), sys.forcing(InputChannel::CIn));
        assert_eq!(
            sys.forcing(InputChannel::DInDagger),
            sys.forcing(InputChannel::CInDagger)
        );
        let f1 = sys.forcing(InputChannel::Xi1);
        assert_eq!(f1[2], Complex64::new(1.0, 0.0));
        assert_eq!((f1[0], f1[1], f1[3]), (zero(), zero(), zero()));

        // g = 0: cavity and mechanics decouple into 2x2 blocks.
        let (mut pg, _) = fig2(&[]);
        pg.g = 0.0;
        let ssg = solve_operating(&pg).unwrap();
        let sysg = assemble(&pg, &ssg, 1.03 * pg.omega1);
        for (r, c) in [(0, 2), (1, 2), (2, 0), (2, 1)] {
            assert_eq!(sysg.matrix[r][c], zero());
        }

        // lambda = 0: the mechanics block is diagonal.
        let (pl, ssl) = fig2(&[("coulomb_lambda", "0")]);
        let sysl = assemble(&pl, &ssl, 1.03 * pl.omega1);
        assert_eq!(sysl.matrix[2][3], zero());
        assert_eq!(sysl.matrix[3][2], zero());
    }

    #[test]
    fn conjugate_pairing_of_the_assembled_matrix() {
        // M(−ω) equals the swap-rows/cols-1↔2 conjugate of M(ω), exactly:
        // every entry is built from the same products with sign flips that
        // are lossless in floating point.
        let (p, ss) = fig2(&[]);
        let swap = [1usize, 0, 2, 3];
        for x in [0.35, 0.93, 1.0, 1.017] {
            let plus = assemble(&p, &ss, x * p.omega1);
            let minus = assemble(&p, &ss, -x * p.omega1);
            for r in 0..4 {
                for c in 0..4 {
                    assert_eq!(
                        minus.matrix[swap[r]][swap[c]],
                        plus.matrix[r][c].conj(),
                        "mismatch at ({r},{c}), x = {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn conjugate_response_identity() {
        // The δc‡ response to the conjugate probe at ω equals conj(E(−ω)).
        let (p, ss) = fig2(&[]);
        for x in [0.95, 1.0, 1.042] {
            let plus = assemble(&p, &ss, x * p.omega1);
            let minus = assemble(&p, &ss, -x * p.omega1);
            let fac_plus = factor(&plus.matrix, plus.omega).unwrap();
            let fac_minus = factor(&minus.matrix, minus.omega).unwrap();
            let dagger_resp = fac_plus.solve(&plus.forcing(InputChannel::CInDagger))[1];
            let e_neg = fac_minus.solve(&minus.forcing(InputChannel::CIn))[0];
            assert!(
                relative_deviation(dagger_resp, e_neg.conj()) < 1e-12,
                "x = {x}: {dagger_resp} vs conj {e_neg}"
            );
        }
    }

    #[test]
    fn elimination_agrees_with_dense_library_solver() {
        let (p, ss) = fig2(&[]);
        for x in [0.91, 0.99, 1.0, 1.06] {
            let sys = assemble(&p, &ss, x * p.omega1);
            let raw = solve_scaled(&sys).unwrap();
            let m = Matrix4::from_fn(|r, c| sys.matrix[r][c]);

            let det_ref = m.determinant();
            assert!(
                relative_deviation(raw.det, det_ref) < 1e-12,
                "det mismatch at x = {x}"
            );

            let lu = m.lu();
            for (channel, ours) in [
                (InputChannel::CIn, raw.e),
                (InputChannel::CInDagger, raw.f),
                (InputChannel::Xi1, raw.v1),
                (InputChannel::Xi2, raw.v2),
            ] {
                let b = sys.forcing(channel);
                let x_ref = lu.solve(&Vector4::new(b[0], b[1], b[2], b[3])).unwrap();
                assert!(
                    relative_deviation(ours, x_ref[0]) < 1e-12,
                    "{channel:?} mismatch at x = {x}"
                );
            }
        }
    }

    #[test]
    fn decoupled_cavity_matches_the_bare_lorentzian() {
        let (mut p, _) = fig2(&[]);
        p.g = 0.0;
        let ss = solve_operating(&p).unwrap();
        for x in [0.9, 1.0, 1.1, 2.0] {
            let omega = x * p.omega1;
            let rs = solve_response(&p, &ss, omega).unwrap();
            let bare = (2.0 * p.kappa).sqrt()
                / Complex64::new(2.0 * p.kappa, ss.delta - omega);
            assert!(relative_deviation(rs.e, bare) < 1e-12);
            assert_eq!(rs.f, zero());
            assert_eq!(rs.v1, zero());
            assert_eq!(rs.v2, zero());
        }
    }

    /// Cramer solve of the 3×3 system left after deleting the resonator row
    /// and column — an independent check of the λ = 0 reduction.
    fn solve3(m: [[Complex64; 3]; 3], b: [Complex64; 3]) -> Complex64 {
        let det3 = |a: [[Complex64; 3]; 3]| -> Complex64 {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        };
        let mut replaced = m;
        for r in 0..3 {
            replaced[r][0] = b[r];
        }
        det3(replaced) / det3(m)
    }

    #[test]
    fn resonator_deletion_is_exact_at_lambda_zero() {
        let (p, ss) = fig2(&[("coulomb_lambda", "0")]);
        for x in [0.93, 1.0, 1.08] {
            let sys = assemble(&p, &ss, x * p.omega1);
            let raw = solve_scaled(&sys).unwrap();

            // Independent 3×3 elimination of the same physics.
            let m3 = [
                [sys.matrix[0][0], sys.matrix[0][1], sys.matrix[0][2]],
                [sys.matrix[1][0], sys.matrix[1][1], sys.matrix[1][2]],
                [sys.matrix[2][0], sys.matrix[2][1], sys.matrix[2][2]],
            ];
            let b = sys.forcing(InputChannel::CIn);
            let e3 = solve3(m3, [b[0], b[1], b[2]]);
            assert!(
                relative_deviation(raw.e, e3) < 1e-12,
                "4x4 vs 3x3 E mismatch at x = {x}"
            );
            // The resonator cannot be driven into the output when decoupled.
            assert_eq!(raw.v2, zero());
        }

        // With the coupling off, the resonator parameters must not leak into
        // the solution at all — bit-for-bit.
        let (p2, ss2) = fig2(&[
            ("coulomb_lambda", "0"),
            ("f2_hz", "51e3"),
            ("m2_kg", "7e-12"),
            ("Q2", "2.2e4"),
        ]);
        for x in [0.93, 1.0, 1.08] {
            let a = solve_scaled(&assemble(&p, &ss, x * p.omega1)).unwrap();
            let b = solve_scaled(&assemble(&p2, &ss2, x * p2.omega1)).unwrap();
            assert_eq!(a.e, b.e);
            assert_eq!(a.f, b.f);
            assert_eq!(a.v1, b.v1);
        }
    }

    #[test]
    fn determinant_matches_the_closed_form_denominator() {
        // Independent derivations of the same quantity: the LU determinant
        // and the denominator of the hand-solved closed form.
        let (p, ss) = fig2(&[]);
        for x in [0.9, 0.97, 1.0, 1.01, 1.1] {
            let omega = x * p.omega1;
            let d_oracle = solve_response(&p, &ss, omega).unwrap().d;
            let d_closed = transfer_functions(&p, &ss, omega, ResponseMode::Rederived)
                .unwrap()
                .d;
            assert!(
                relative_deviation(d_oracle, d_closed) < 1e-10,
                "determinant vs closed-form denominator at x = {x}: {d_oracle} vs {d_closed}"
            );
        }
    }

    #[test]
    fn solver_is_linear_in_the_forcing() {
        let (p, ss) = fig2(&[]);
        let sys = assemble(&p, &ss, 1.02 * p.omega1);
        let fac = factor(&sys.matrix, sys.omega).unwrap();
        let b = sys.forcing(InputChannel::CIn);
        let doubled = [2.0 * b[0], 2.0 * b[1], 2.0 * b[2], 2.0 * b[3]];
        let x1 = fac.solve(&b);
        let x2 = fac.solve(&doubled);
        for k in 0..4 {
            // Scaling by 2 is exact in binary floating point.
            assert_eq!(x2[k], 2.0 * x1[k]);
        }
    }

    #[test]
    fn reference_matrix_is_well_conditioned() {
        let (p, ss) = fig2(&[]);
        let sys = assemble(&p, &ss, p.omega1);
        let m = Matrix4::from_fn(|r, c| sys.matrix[r][c]);
        let sv = m.svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(f64::MIN, f64::max);
        let smin = sv.iter().cloned().fold(f64::MAX, f64::min);
        let cond = smax / smin;
        assert!(cond < 1e6, "condition number {cond:.3e} at omega1");
        // And the determinant sits far above the singularity floor.
        let raw = solve_scaled(&sys).unwrap();
        assert!(raw.det.norm() > 1e-6);
    }

    #[test]
    fn singular_systems_are_reported() {
        let one = Complex64::new(1.0, 0.0);
        let sys = LinearSystem {
            omega: 123.0,
            // Two identical rows: rank 3.
            matrix: [
                [one, zero(), zero(), zero()],
                [one, zero(), zero(), zero()],
                [zero(), zero(), one, zero()],
                [zero(), zero(), zero(), one],
            ],
            input_columns: [[zero(); 4]; 6],
        };
        match solve_scaled(&sys) {
            Err(OracleError::SingularMatrix { omega }) => assert_eq!(omega, 123.0),
            other => panic!("expected SingularMatrix, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn mode_comparison_separates_the_transcription_from_the_algebra() {
        let (p, ss) = fig2(&[]);
        let grid = FrequencyGrid {
            start: 0.9 * p.omega1,
            stop: 1.1 * p.omega1,
            points: 201,
        }
        .sample()
        .unwrap();
        let report = compare_modes(&p, &ss, &grid).unwrap();

        // The hand algebra and the numeric solve are the same physics.
        assert!(
            report.worst_rederived_vs_oracle() < 1e-8,
            "rederived vs oracle {:.3e}",
            report.worst_rederived_vs_oracle()
        );
        // The verbatim transcription is not: its thermal-force coefficients
        // are off by orders of magnitude (documented, not corrected).
        assert!(report.paper_vs_oracle.v1.max_rel > 0.9);
        assert!(report.paper_vs_oracle.v2.max_rel > 0.9);
        assert!(report.paper_vs_rederived.v2.max_rel > 0.9);
        // Deviation locations land inside the evaluation window.
        let inside = |w: f64| w >= grid[0] && w <= grid[grid.len() - 1];
        assert!(inside(report.rederived_vs_oracle.e.at_omega));
        assert!(inside(report.paper_vs_oracle.v1.at_omega));

        // A mode compared against itself deviates by exactly zero.
        let sets: Vec<ResponseSet> = grid
            .iter()
            .step_by(20)
            .map(|&w| transfer_functions(&p, &ss, w, ResponseMode::Oracle).unwrap())
            .collect();
        let self_rep = pair_deviation(&sets, &sets);
        assert_eq!(self_rep.worst(), 0.0);

        assert!(matches!(
            compare_modes(&p, &ss, &[]),
            Err(ResponseError::BadGrid { .. })
        ));
    }
}
