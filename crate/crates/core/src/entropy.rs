//! Relative entropies and the conditional entropies they induce.
//!
//! Four divergence families are implemented: Umegaki (the standard quantum
//! relative entropy), the Petz-Renyi family, the sandwiched Renyi family,
//! and the max-relative entropy. Each conditional entropy is the induced
//! quantity `log2 |A| - D(rho_AB || u_A (x) rho_B)`; the min-entropy pair
//! [`hmin`] and [`hmin_up`] bound the whole family from below. All
//! logarithms are base 2 and all values are in bits.
//!
//! Parameter policy: Renyi orders are accepted only where data processing
//! holds (Petz `(0,1) u (1,2]`, sandwiched `[1/2,1) u (1,inf)`); anything
//! else is [`EntropyError::InvalidAlpha`], because outside those ranges the
//! induced quantity is not a conditional entropy at all.
//!
//! Support policy: divergences that compare `rho` against the support of
//! `sigma` (Umegaki, the `alpha > 1` Renyi orders, max-relative) grade the
//! leaked mass `Tr[rho (1 - supp sigma)]`. Leaks beyond
//! [`tol::SUPPORT_LEAK_TOL`] mean the divergence is genuinely `+inf`;
//! leaks in the gray zone above [`tol::SUPPORT_LEAK_WARN`] keep the finite
//! common-support value but set `support_warning`. `+inf` is an ordinary
//! value here, never an error, and no code path produces NaN.

use thiserror::Error;

use crate::linalg::{self, ComplexMatrix, Spectrum};
use crate::sdp::{self, BlockSpec, ConicProblem, Equality, Functional, SolveStatus};
use crate::states::{BipartiteState, System};
use crate::tol;

/// Which relative entropy drives a computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceKind {
    /// Umegaki relative entropy `Tr[rho (log2 rho - log2 sigma)]`.
    Umegaki,
    /// Petz-Renyi divergence `(alpha-1)^-1 log2 Tr[rho^alpha sigma^(1-alpha)]`.
    Petz(f64),
    /// Sandwiched Renyi divergence
    /// `(alpha-1)^-1 log2 Tr[(sigma^((1-alpha)/2alpha) rho sigma^((1-alpha)/2alpha))^alpha]`.
    Sandwiched(f64),
    /// Max-relative entropy `log2 min{lambda : rho <= lambda sigma}`.
    MaxRelative,
}

impl DivergenceKind {
    /// Rejects Renyi orders outside the interval where data processing
    /// holds; the other two kinds are parameter-free.
    pub fn validate(self) -> Result<(), EntropyError> {
        match self {
            DivergenceKind::Petz(alpha) => {
                if alpha > 0.0 && alpha != 1.0 && alpha <= 2.0 {
                    Ok(())
                } else {
                    Err(EntropyError::InvalidAlpha {
                        family: "Petz",
                        alpha,
                        range: "(0,1) u (1,2]",
                    })
                }
            }
            DivergenceKind::Sandwiched(alpha) => {
                if alpha >= 0.5 && alpha != 1.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(EntropyError::InvalidAlpha {
                        family: "sandwiched",
                        alpha,
                        range: "[1/2,1) u (1,inf)",
                    })
                }
            }
            DivergenceKind::Umegaki | DivergenceKind::MaxRelative => Ok(()),
        }
    }
}

/// Errors from entropy computations.
#[derive(Debug, Error)]
pub enum EntropyError {
    /// The two operands live on differently shaped systems.
    #[error("operand shapes differ: ({lhs_a}, {lhs_b}) vs ({rhs_a}, {rhs_b})")]
    DimensionMismatch { lhs_a: usize, lhs_b: usize, rhs_a: usize, rhs_b: usize },
    /// Renyi order outside the data-processing interval of its family.
    #[error("alpha = {alpha} is outside {range}, where data processing holds for the {family} family")]
    InvalidAlpha { family: &'static str, alpha: f64, range: &'static str },
    /// The min-entropy semidefinite program did not reach optimality.
    #[error("min-entropy solve failed: {status}")]
    SolverFailure { status: String },
}

/// A computed entropy or divergence, in bits.
///
/// `value` is finite or `+inf`, never NaN. `support_warning` means a
/// support-containment premise held only within tolerance, so the finite
/// value shown is the common-support evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    pub support_warning: bool,
}

impl EntropyValue {
    fn new(value: f64, support_warning: bool) -> Self {
        debug_assert!(!value.is_nan(), "entropy values are never NaN");
        EntropyValue { value, support_warning }
    }

    fn infinite(support_warning: bool) -> Self {
        EntropyValue::new(f64::INFINITY, support_warning)
    }
}

/// von Neumann entropy `-sum lambda log2 lambda` over the support.
///
/// ```
/// use qcem::entropy::von_neumann;
/// use qcem::states::uniform;
///
/// assert!((von_neumann(&uniform(4)).value - 2.0).abs() < 1e-12);
/// ```
pub fn von_neumann(rho: &BipartiteState) -> EntropyValue {
    let spec = linalg::eig_hermitian(rho.matrix()).expect("state was validated on construction");
    let cut = spec.support_cutoff();
    let h: f64 = spec.values.iter().filter(|&&l| l > cut).map(|&l| -(l * l.log2())).sum();
    EntropyValue::new(h.max(0.0), false)
}

/// Relative entropy of `rho` from `sigma` for the requested kind.
///
/// Both operands must carry the same `(A, B)` split. For kinds with a
/// support condition (Umegaki, `alpha > 1`, max-relative), mass of `rho`
/// outside the support of `sigma` beyond tolerance makes the value `+inf`.
pub fn relative_entropy(
    kind: DivergenceKind,
    rho: &BipartiteState,
    sigma: &BipartiteState,
) -> Result<EntropyValue, EntropyError> {
    kind.validate()?;
    if rho.dim_a() != sigma.dim_a() || rho.dim_b() != sigma.dim_b() {
        return Err(EntropyError::DimensionMismatch {
            lhs_a: rho.dim_a(),
            lhs_b: rho.dim_b(),
            rhs_a: sigma.dim_a(),
            rhs_b: sigma.dim_b(),
        });
    }
    Ok(divergence(kind, rho.matrix(), sigma.matrix(), true))
}

/// Conditional entropy `log2 |A| - D(rho_AB || u_A (x) rho_B)`.
///
/// The comparison state contains the support of `rho_AB` by the marginal
/// support theorem, so the result is always finite; residual leaks only
/// ever set the warning flag.
///
/// ```
/// use qcem::entropy::{conditional_entropy, DivergenceKind};
/// use qcem::states::maximally_entangled;
///
/// let h = conditional_entropy(DivergenceKind::Umegaki, &maximally_entangled(2)).unwrap();
/// assert!((h.value + 1.0).abs() < 1e-9);
/// ```
pub fn conditional_entropy(
    kind: DivergenceKind,
    rho: &BipartiteState,
) -> Result<EntropyValue, EntropyError> {
    kind.validate()?;
    let da = rho.dim_a();
    let rho_b = rho.marginal(System::B);
    let ua = ComplexMatrix::identity(da).scale(1.0 / da as f64);
    let sigma = linalg::kron(&ua, rho_b.matrix());
    let d = divergence(kind, rho.matrix(), &sigma, false);
    debug_assert!(d.value.is_finite(), "conditional comparison state covers the support");
    Ok(EntropyValue::new((da as f64).log2() - d.value, d.support_warning))
}

/// Conditional min-entropy `-log2 min{lambda : rho_AB <= lambda I_A (x) rho_B}`,
/// computed in closed form as `-log2` of the largest eigenvalue of
/// `(I (x) rho_B)^(-1/2) rho_AB (I (x) rho_B)^(-1/2)`.
///
/// The marginal's support contains the state's support as a theorem; a
/// measured leak beyond [`tol::EPS_SUPP`] sets `support_warning`.
pub fn hmin(rho: &BipartiteState) -> EntropyValue {
    let rho_b = rho.marginal(System::B);
    let (lam, leak) = sandwich_against(rho, rho_b.matrix());
    let warn = leak > tol::EPS_SUPP;
    if lam <= 0.0 {
        return EntropyValue::infinite(true);
    }
    EntropyValue::new(-lam.log2(), warn)
}

/// Largest eigenvalue of `(I (x) sigma)^(-1/2) rho (I (x) sigma)^(-1/2)` and
/// the mass of `rho` outside `I (x) supp(sigma)`; the raw ingredients of the
/// min-entropies, shared with the channel constructions that condition on an
/// explicit `sigma`.
pub(crate) fn sandwich_against(rho: &BipartiteState, sigma_b: &ComplexMatrix) -> (f64, f64) {
    let da = rho.dim_a();
    let spec_b = linalg::eig_hermitian(sigma_b).expect("conditioning operand is hermitian");
    let pinv_sqrt_b = power_on_support(&spec_b, -0.5);
    let scaler = linalg::kron(&ComplexMatrix::identity(da), &pinv_sqrt_b);
    let t = scaler.mul(rho.matrix()).mul(&scaler).hermitize();
    let spec_t = linalg::eig_hermitian(&t).expect("hermitized by construction");
    let lam = spec_t.values.first().copied().unwrap_or(0.0);

    let pi = linalg::kron(&ComplexMatrix::identity(da), &spec_b.support_projector());
    let leak = (rho.matrix().trace().re - rho.matrix().inner_re(&pi)).max(0.0);
    (lam, leak)
}

/// Optimized conditional min-entropy `-log2 min{Tr X : I_A (x) X >= rho_AB}`,
/// the variant where the conditioning state is chosen freely. Always at
/// least [`hmin`]. Solved as a semidefinite program.
pub fn hmin_up(rho: &BipartiteState) -> Result<EntropyValue, EntropyError> {
    hmin_up_with_optimizer(rho).map(|(v, _)| v)
}

/// [`hmin_up`] together with the normalized optimizer `X*/Tr[X*]`, the
/// conditioning state on `B` that attains the optimum.
pub fn hmin_up_with_optimizer(
    rho: &BipartiteState,
) -> Result<(EntropyValue, ComplexMatrix), EntropyError> {
    let da = rho.dim_a();
    let db = rho.dim_b();
    let d = da * db;
    let xb = 0usize;
    let zb = 1usize;

    // Z = I (x) X - rho as a PSD block; one equality per Hermitian basis
    // element H pins <H, Z> - <Tr_A H, X> = -<H, rho>.
    let mut equalities = Vec::with_capacity(d * d);
    for h in linalg::hermitian_basis(d) {
        let mut f = Functional::new();
        f.add_hermitian(zb, &h, 1.0);
        let hb = linalg::partial_trace(&h, &[da, db], &[1]).expect("basis dims are fixed");
        f.add_hermitian(xb, &hb, -1.0);
        let rhs = -h.mul(rho.matrix()).trace().re;
        equalities.push(Equality::new(f, rhs));
    }
    let mut objective = Functional::new();
    objective.add_hermitian(xb, &ComplexMatrix::identity(db), 1.0);
    let problem = ConicProblem {
        blocks: vec![BlockSpec::Psd(2 * db), BlockSpec::Psd(2 * d)],
        objective,
        equalities,
    };
    let sol = sdp::solve(&problem)
        .map_err(|e| EntropyError::SolverFailure { status: e.to_string() })?;
    if sol.status != SolveStatus::Optimal {
        return Err(EntropyError::SolverFailure { status: format!("{:?}", sol.status) });
    }
    let best = sol.objective_value;
    if !(best > 0.0) {
        return Err(EntropyError::SolverFailure {
            status: format!("nonpositive optimum {best}"),
        });
    }
    let x = sdp::extract_hermitian(&sol.primal[xb])
        .map_err(|e| EntropyError::SolverFailure { status: e.to_string() })?;
    let xtr = x.trace().re;
    let sigma = x.scale(1.0 / xtr);
    Ok((EntropyValue::new(-best.log2(), false), sigma))
}

/// Reduction criterion `I_A (x) rho_B >= rho_AB`: returns whether it holds
/// and the minimum eigenvalue of the gap operator.
pub fn reduction_criterion(rho: &BipartiteState) -> (bool, f64) {
    let da = rho.dim_a();
    let rho_b = rho.marginal(System::B);
    let gap = linalg::kron(&ComplexMatrix::identity(da), rho_b.matrix())
        .sub(rho.matrix())
        .hermitize();
    let spec = linalg::eig_hermitian(&gap).expect("hermitized by construction");
    let min_eig = spec.values.last().copied().unwrap_or(0.0);
    (min_eig >= -tol::EPS_PSD, min_eig)
}

/// Leak grading outcome for a support-containment premise.
enum Leak {
    Clean,
    Warn,
    Diverge,
}

/// Grades `Tr[rho (1 - supp sigma)]` against the crate thresholds. Strict
/// callers treat beyond-tolerance leaks as divergence; the lenient form is
/// for comparison states that contain the support by theorem, where a large
/// measured leak can only be numerical noise.
fn grade_leak(leak: f64, strict: bool) -> Leak {
    if leak > tol::SUPPORT_LEAK_TOL {
        if strict {
            Leak::Diverge
        } else {
            Leak::Warn
        }
    } else if leak > tol::SUPPORT_LEAK_WARN {
        Leak::Warn
    } else {
        Leak::Clean
    }
}

fn leak_outside_support(rho: &ComplexMatrix, sigma_spec: &Spectrum) -> f64 {
    let pi = sigma_spec.support_projector();
    (rho.trace().re - rho.inner_re(&pi)).max(0.0)
}

/// `U f(Lambda) U^dag` with `f = lambda^p` on the support and zero off it.
fn power_on_support(spec: &Spectrum, p: f64) -> ComplexMatrix {
    let cut = spec.support_cutoff();
    let mapped: Vec<f64> =
        spec.values.iter().map(|&l| if l > cut { l.powf(p) } else { 0.0 }).collect();
    spec.assemble(&mapped)
}

fn log2_on_support(spec: &Spectrum) -> ComplexMatrix {
    let cut = spec.support_cutoff();
    let mapped: Vec<f64> =
        spec.values.iter().map(|&l| if l > cut { l.log2() } else { 0.0 }).collect();
    spec.assemble(&mapped)
}

fn divergence(
    kind: DivergenceKind,
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    strict: bool,
) -> EntropyValue {
    let sigma_spec =
        linalg::eig_hermitian(sigma).expect("comparison operand was validated");
    match kind {
        DivergenceKind::Umegaki => umegaki(rho, &sigma_spec, strict),
        DivergenceKind::Petz(alpha) => petz(alpha, rho, &sigma_spec, strict),
        DivergenceKind::Sandwiched(alpha) => sandwiched(alpha, rho, &sigma_spec, strict),
        DivergenceKind::MaxRelative => max_relative(rho, &sigma_spec, strict),
    }
}

fn umegaki(rho: &ComplexMatrix, sigma_spec: &Spectrum, strict: bool) -> EntropyValue {
    let warn = match grade_leak(leak_outside_support(rho, sigma_spec), strict) {
        Leak::Diverge => return EntropyValue::infinite(false),
        Leak::Warn => true,
        Leak::Clean => false,
    };
    let rho_spec = linalg::eig_hermitian(rho).expect("first operand was validated");
    let cut = rho_spec.support_cutoff();
    let plogp: f64 =
        rho_spec.values.iter().filter(|&&l| l > cut).map(|&l| l * l.log2()).sum();
    let cross = rho.inner_re(&log2_on_support(sigma_spec));
    EntropyValue::new(plogp - cross, warn)
}

fn petz(alpha: f64, rho: &ComplexMatrix, sigma_spec: &Spectrum, strict: bool) -> EntropyValue {
    let warn = if alpha > 1.0 {
        match grade_leak(leak_outside_support(rho, sigma_spec), strict) {
            Leak::Diverge => return EntropyValue::infinite(false),
            Leak::Warn => true,
            Leak::Clean => false,
        }
    } else {
        false
    };
    let rho_spec = linalg::eig_hermitian(rho).expect("first operand was validated");
    let q = power_on_support(&rho_spec, alpha).inner_re(&power_on_support(sigma_spec, 1.0 - alpha));
    if q <= 0.0 {
        return EntropyValue::infinite(warn);
    }
    EntropyValue::new(q.log2() / (alpha - 1.0), warn)
}

fn sandwiched(
    alpha: f64,
    rho: &ComplexMatrix,
    sigma_spec: &Spectrum,
    strict: bool,
) -> EntropyValue {
    let warn = if alpha > 1.0 {
        match grade_leak(leak_outside_support(rho, sigma_spec), strict) {
            Leak::Diverge => return EntropyValue::infinite(false),
            Leak::Warn => true,
            Leak::Clean => false,
        }
    } else {
        false
    };
    let g = power_on_support(sigma_spec, (1.0 - alpha) / (2.0 * alpha));
    let m = g.mul(rho).mul(&g).hermitize();
    let m_spec = linalg::eig_hermitian(&m).expect("hermitized by construction");
    let lead = m_spec.values.first().copied().unwrap_or(0.0);
    if lead <= 0.0 {
        return EntropyValue::infinite(warn);
    }
    // log-domain sum keeps large orders finite: Tr[M^a] = lead^a * sum ratios^a
    let cut = m_spec.support_cutoff();
    let ratio_sum: f64 =
        m_spec.values.iter().filter(|&&l| l > cut).map(|&l| (l / lead).powf(alpha)).sum();
    let log2_q = alpha * lead.log2() + ratio_sum.log2();
    EntropyValue::new(log2_q / (alpha - 1.0), warn)
}

fn max_relative(rho: &ComplexMatrix, sigma_spec: &Spectrum, strict: bool) -> EntropyValue {
    let warn = match grade_leak(leak_outside_support(rho, sigma_spec), strict) {
        Leak::Diverge => return EntropyValue::infinite(false),
        Leak::Warn => true,
        Leak::Clean => false,
    };
    let s = power_on_support(sigma_spec, -0.5);
    let t = s.mul(rho).mul(&s).hermitize();
    let spec_t = linalg::eig_hermitian(&t).expect("hermitized by construction");
    let lam = spec_t.values.first().copied().unwrap_or(0.0);
    if lam <= 0.0 {
        return EntropyValue::infinite(true);
    }
    EntropyValue::new(lam.log2(), warn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorize::ClassicalJoint;
    use num_complex::Complex64;
    use crate::states::{
        classical_embed, make_state, maximally_entangled, sample_random, tensor, uniform,
        SampleKind,
    };
    use proptest::prelude::*;

    const ALL_KINDS: [DivergenceKind; 9] = [
        DivergenceKind::Umegaki,
        DivergenceKind::Petz(0.5),
        DivergenceKind::Petz(1.5),
        DivergenceKind::Petz(2.0),
        DivergenceKind::Sandwiched(0.5),
        DivergenceKind::Sandwiched(0.75),
        DivergenceKind::Sandwiched(2.0),
        DivergenceKind::Sandwiched(3.0),
        DivergenceKind::MaxRelative,
    ];

    fn correlated_bits() -> BipartiteState {
        let joint = ClassicalJoint::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        classical_embed(&joint)
    }

    fn diag_state(probs: &[f64]) -> BipartiteState {
        make_state(ComplexMatrix::from_diag(probs), probs.len(), 1).unwrap()
    }

    fn uniform_product(da: usize, rho_b: &BipartiteState) -> BipartiteState {
        let ua = ComplexMatrix::identity(da).scale(1.0 / da as f64);
        let m = linalg::kron(&ua, rho_b.matrix());
        make_state(m, da, rho_b.dim()).unwrap()
    }

    #[test]
    fn von_neumann_of_uniform_and_pure_states() {
        assert!((von_neumann(&uniform(4)).value - 2.0).abs() < 1e-12);
        for seed in 0..5 {
            let pure = sample_random((2, 2), SampleKind::Pure, seed);
            assert!(von_neumann(&pure).value.abs() < 1e-9);
        }
    }

    #[test]
    fn von_neumann_matches_binary_distribution() {
        let h = von_neumann(&diag_state(&[0.75, 0.25]));
        let want = 2.0 - 0.75 * 3.0f64.log2();
        assert!((h.value - want).abs() < 1e-12, "got {}", h.value);
    }

    #[test]
    fn divergence_of_a_state_from_itself_is_zero() {
        for seed in 0..4 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, seed);
            for kind in ALL_KINDS {
                let d = relative_entropy(kind, &rho, &rho).unwrap();
                assert!(d.value.abs() < 1e-9, "{kind:?} gave {}", d.value);
                assert!(!d.support_warning);
            }
        }
    }

    #[test]
    fn max_relative_entropy_against_the_uniform_product() {
        let phi = maximally_entangled(2);
        let sigma = make_state(ComplexMatrix::identity(4).scale(0.25), 2, 2).unwrap();
        let d = relative_entropy(DivergenceKind::MaxRelative, &phi, &sigma).unwrap();
        assert!((d.value - 2.0).abs() < 1e-9, "got {}", d.value);
    }

    #[test]
    fn petz_quadratic_on_diagonal_pair_matches_scalar_value() {
        let rho = diag_state(&[0.5, 0.5]);
        let sigma = diag_state(&[0.25, 0.75]);
        let d = relative_entropy(DivergenceKind::Petz(2.0), &rho, &sigma).unwrap();
        let want = (4.0f64 / 3.0).log2();
        assert!((d.value - want).abs() < 1e-12, "got {}", d.value);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let rho = sample_random((2, 2), SampleKind::Ginibre, 1);
        let sigma = sample_random((4, 1), SampleKind::Ginibre, 1);
        let err = relative_entropy(DivergenceKind::Umegaki, &rho, &sigma).unwrap_err();
        assert!(matches!(err, EntropyError::DimensionMismatch { .. }));
    }

    proptest! {
        #[test]
        fn petz_orders_gate_on_the_data_processing_interval(alpha in -1.0f64..4.0) {
            let ok = DivergenceKind::Petz(alpha).validate().is_ok();
            prop_assert_eq!(ok, alpha > 0.0 && alpha != 1.0 && alpha <= 2.0);
        }

        #[test]
        fn sandwiched_orders_gate_on_the_data_processing_interval(alpha in -1.0f64..8.0) {
            let ok = DivergenceKind::Sandwiched(alpha).validate().is_ok();
            prop_assert_eq!(ok, alpha >= 0.5 && alpha != 1.0);
        }

        #[test]
        fn petz_quadratic_matches_the_scalar_formula(p in 0.05f64..0.95, q in 0.05f64..0.95) {
            let rho = diag_state(&[p, 1.0 - p]);
            let sigma = diag_state(&[q, 1.0 - q]);
            let d = relative_entropy(DivergenceKind::Petz(2.0), &rho, &sigma).unwrap();
            let want = (p * p / q + (1.0 - p) * (1.0 - p) / (1.0 - q)).log2();
            prop_assert!((d.value - want).abs() < 1e-9);
        }
    }

    #[test]
    fn non_numeric_orders_are_rejected() {
        assert!(DivergenceKind::Petz(f64::NAN).validate().is_err());
        assert!(DivergenceKind::Sandwiched(f64::NAN).validate().is_err());
        assert!(DivergenceKind::Sandwiched(f64::INFINITY).validate().is_err());
    }

    #[test]
    fn conditional_entropy_of_maximal_entanglement_is_minus_one() {
        let phi = maximally_entangled(2);
        let h = conditional_entropy(DivergenceKind::Umegaki, &phi).unwrap();
        assert!((h.value + 1.0).abs() < 1e-9, "got {}", h.value);
    }

    #[test]
    fn conditional_entropy_of_uniform_products_is_log_dim() {
        let rho_b = sample_random((3, 1), SampleKind::Ginibre, 7);
        let prod = uniform_product(3, &rho_b);
        for kind in ALL_KINDS {
            let h = conditional_entropy(kind, &prod).unwrap();
            assert!((h.value - 3.0f64.log2()).abs() < 1e-8, "{kind:?} gave {}", h.value);
        }
    }

    #[test]
    fn conditional_entropy_of_correlated_classical_state_vanishes() {
        let cc = correlated_bits();
        let h = conditional_entropy(DivergenceKind::Umegaki, &cc).unwrap();
        assert!(h.value.abs() < 1e-12, "got {}", h.value);
    }

    #[test]
    fn min_entropy_closed_forms() {
        for k in 2..=5usize {
            let h = hmin(&maximally_entangled(k));
            assert!((h.value + (k as f64).log2()).abs() < 1e-9, "k={k} gave {}", h.value);
        }
        let rho_b = sample_random((2, 1), SampleKind::Ginibre, 3);
        let prod = uniform_product(4, &rho_b);
        assert!((hmin(&prod).value - 2.0).abs() < 1e-9);
        assert!(hmin(&correlated_bits()).value.abs() < 1e-9);
    }

    #[test]
    fn optimized_min_entropy_matches_closed_forms() {
        for k in 2..=3usize {
            let h = hmin_up(&maximally_entangled(k)).unwrap();
            assert!((h.value + (k as f64).log2()).abs() < 1e-6, "k={k} gave {}", h.value);
        }
        let rho_b = sample_random((2, 1), SampleKind::Ginibre, 9);
        let prod = uniform_product(3, &rho_b);
        assert!((hmin_up(&prod).unwrap().value - 3.0f64.log2()).abs() < 1e-6);
        assert!(hmin_up(&correlated_bits()).unwrap().value.abs() < 1e-6);
    }

    #[test]
    fn optimized_min_entropy_returns_normalized_optimizer() {
        let (h, sigma) = hmin_up_with_optimizer(&maximally_entangled(2)).unwrap();
        assert!((h.value + 1.0).abs() < 1e-6);
        assert!((sigma.trace().re - 1.0).abs() < 1e-9);
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 0.5 } else { 0.0 };
                assert!((sigma[(r, c)] - Complex64::new(want, 0.0)).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn reduction_criterion_flags_entanglement_and_accepts_products() {
        let (holds, min_eig) = reduction_criterion(&maximally_entangled(2));
        assert!(!holds);
        assert!((min_eig + 0.5).abs() < 1e-9, "got {min_eig}");

        for seed in 0..20 {
            let sep = sample_random((2, 2), SampleKind::Separable { terms: 3 }, seed);
            let (holds, _) = reduction_criterion(&sep);
            assert!(holds, "separable state {seed} failed the criterion");
        }
    }

    #[test]
    fn every_divergence_dominates_min_entropy_on_random_states() {
        let dims = [(2, 2), (2, 3), (3, 2)];
        for (i, dims) in dims.into_iter().enumerate() {
            for seed in 0..6 {
                let rho = sample_random(dims, SampleKind::Ginibre, seed + 100 * i as u64);
                let floor = hmin(&rho).value;
                for kind in ALL_KINDS {
                    let h = conditional_entropy(kind, &rho).unwrap();
                    assert!(
                        h.value >= floor - 1e-7,
                        "{kind:?} on {dims:?} seed {seed}: {} < {floor}",
                        h.value
                    );
                }
            }
        }
    }

    #[test]
    fn divergences_contract_under_channels() {
        for trial in 0..6u64 {
            let dims = if trial % 2 == 0 { (2, 2) } else { (2, 3) };
            let rho = sample_random(dims, SampleKind::Ginibre, 900 + trial);
            let sigma = sample_random(dims, SampleKind::Ginibre, 950 + trial);
            let n = crate::channels::sample_channel((dims.0, dims.1, 2, 2), 3, 1000 + trial);
            let rho_out = crate::channels::apply(&n, &rho).unwrap();
            let sigma_out = crate::channels::apply(&n, &sigma).unwrap();
            for kind in ALL_KINDS {
                let before = relative_entropy(kind, &rho, &sigma).unwrap().value;
                let after = relative_entropy(kind, &rho_out, &sigma_out).unwrap().value;
                assert!(
                    after <= before + 1e-7,
                    "{kind:?} trial {trial}: {after} > {before}"
                );
            }
        }
    }

    #[test]
    fn optimized_min_entropy_sits_between_min_entropy_and_umegaki() {
        for seed in 0..8 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, seed);
            let lo = hmin(&rho).value;
            let mid = hmin_up(&rho).unwrap().value;
            let hi = conditional_entropy(DivergenceKind::Umegaki, &rho).unwrap().value;
            assert!(mid >= lo - 1e-6, "seed {seed}: {mid} < {lo}");
            assert!(hi >= mid - 1e-6, "seed {seed}: {hi} < {mid}");
        }
    }

    #[test]
    fn conditional_entropies_add_over_tensor_products() {
        for seed in 0..3 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, seed);
            let tau = sample_random((2, 2), SampleKind::Ginibre, seed + 50);
            let joint = tensor(&rho, &tau);
            for kind in ALL_KINDS {
                let lhs = conditional_entropy(kind, &joint).unwrap().value;
                let rhs = conditional_entropy(kind, &rho).unwrap().value
                    + conditional_entropy(kind, &tau).unwrap().value;
                assert!((lhs - rhs).abs() < 1e-8, "{kind:?} seed {seed}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn conditional_entropy_reduces_to_marginal_entropy_on_products() {
        for seed in 0..3 {
            let omega = sample_random((3, 1), SampleKind::Ginibre, seed);
            let tau = sample_random((2, 1), SampleKind::Ginibre, seed + 30);
            let m = linalg::kron(omega.matrix(), tau.matrix());
            let prod = make_state(m, 3, 2).unwrap();

            let umegaki = conditional_entropy(DivergenceKind::Umegaki, &prod).unwrap();
            assert!((umegaki.value - von_neumann(&omega).value).abs() < 1e-9);

            let ua = uniform(3);
            for kind in ALL_KINDS {
                let h = conditional_entropy(kind, &prod).unwrap().value;
                let marginal =
                    3.0f64.log2() - relative_entropy(kind, &omega, &ua).unwrap().value;
                assert!((h - marginal).abs() < 1e-9, "{kind:?} seed {seed}: {h} vs {marginal}");
            }
        }
    }

    #[test]
    fn values_survive_local_embeddings() {
        let rho = sample_random((2, 2), SampleKind::Ginibre, 11);
        let wider_a = make_state(rho.embed(3, 2).unwrap().matrix().clone(), 3, 2).unwrap();
        let wider_b = make_state(rho.embed(2, 4).unwrap().matrix().clone(), 2, 4).unwrap();
        for kind in ALL_KINDS {
            let base = conditional_entropy(kind, &rho).unwrap().value;
            let via_a = conditional_entropy(kind, &wider_a).unwrap().value;
            let via_b = conditional_entropy(kind, &wider_b).unwrap().value;
            assert!((base - via_a).abs() < 1e-9, "{kind:?} A-embedding: {base} vs {via_a}");
            assert!((base - via_b).abs() < 1e-9, "{kind:?} B-embedding: {base} vs {via_b}");
        }
        assert!((hmin(&rho).value - hmin(&wider_a).value).abs() < 1e-9);
        assert!((hmin(&rho).value - hmin(&wider_b).value).abs() < 1e-9);
        let base_up = hmin_up(&rho).unwrap().value;
        assert!((base_up - hmin_up(&wider_a).unwrap().value).abs() < 1e-6);
        assert!((base_up - hmin_up(&wider_b).unwrap().value).abs() < 1e-6);
    }

    #[test]
    fn support_leak_grades_from_warning_to_divergence() {
        let sigma = diag_state(&[1.0, 0.0]);
        let warn_zone = diag_state(&[1.0 - 3e-11, 3e-11]);
        let broken = diag_state(&[1.0 - 1e-6, 1e-6]);

        for kind in [
            DivergenceKind::Umegaki,
            DivergenceKind::Petz(2.0),
            DivergenceKind::Sandwiched(2.0),
            DivergenceKind::MaxRelative,
        ] {
            let graded = relative_entropy(kind, &warn_zone, &sigma).unwrap();
            assert!(graded.value.is_finite(), "{kind:?} warn-zone value");
            assert!(graded.support_warning, "{kind:?} warn-zone flag");

            let gone = relative_entropy(kind, &broken, &sigma).unwrap();
            assert!(gone.value.is_infinite(), "{kind:?} beyond tolerance");
        }

        // orders below one have no support premise and stay finite
        let low = relative_entropy(DivergenceKind::Petz(0.5), &broken, &sigma).unwrap();
        assert!(low.value.is_finite());
        assert!(!low.support_warning);
    }

    #[test]
    fn orthogonal_supports_diverge_for_every_kind() {
        let zero = diag_state(&[1.0, 0.0]);
        let one = diag_state(&[0.0, 1.0]);
        for kind in ALL_KINDS {
            let d = relative_entropy(kind, &zero, &one).unwrap();
            assert!(d.value.is_infinite(), "{kind:?} gave {}", d.value);
        }
    }

    #[test]
    fn reduction_criterion_agrees_with_min_entropy_sign() {
        for seed in 0..30 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, seed);
            let (holds, _) = reduction_criterion(&rho);
            let floor = hmin(&rho).value;
            assert_eq!(holds, floor >= -1e-8, "seed {seed}: holds={holds} hmin={floor}");
        }
    }
}
