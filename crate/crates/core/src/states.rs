//! Bipartite density operators: construction, validation, marginals, and
//! reproducible random sampling.
//!
//! A [`BipartiteState`] is a density operator on `H_A (x) H_B` tagged with
//! the local dimensions `(dim_a, dim_b)`. Single-system states are the
//! special case `dim_b = 1`; nothing downstream treats that differently.
//!
//! Validation policy: [`make_state`] insists on Hermiticity, positivity,
//! and unit trace within the crate tolerances. Violations *inside*
//! tolerance are repaired deterministically (eigenvalues clipped to zero,
//! spectrum renormalized); violations beyond tolerance are errors naming
//! the broken invariant and its magnitude. Exactly valid inputs pass
//! through bit-identical.
//!
//! Sampling is driven by the seedable generator in [`crate::rng`], so a
//! `(kind, dims, seed)` triple always produces the same state. Three
//! ensembles are provided: `Ginibre` (full-rank states `G G^dag / Tr`,
//! with `G` a square complex Gaussian matrix), `Pure` (Haar-random vector
//! projectors), and `Separable` (Dirichlet-weighted mixtures of product
//! Ginibre states, guaranteed separable by construction).

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, ComplexMatrix};
use crate::majorize::ClassicalJoint;
use crate::rng::Rng;
use crate::tol;

/// Which subsystem of a bipartite state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    A,
    B,
}

/// Errors from state construction.
#[derive(Debug, Error)]
pub enum StateError {
    /// The candidate matrix fails a density-operator invariant beyond
    /// tolerance; `invariant` names which one.
    #[error("not a density matrix: {invariant} violated by {magnitude:.3e}")]
    NotDensityMatrix { invariant: &'static str, magnitude: f64 },
    /// Matrix shape disagrees with the declared local dimensions.
    #[error("matrix is {got}x{got} but dims ({dim_a}, {dim_b}) require {expected}")]
    DimensionMismatch { expected: usize, got: usize, dim_a: usize, dim_b: usize },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Density operator on `H_A (x) H_B`.
#[derive(Clone, Debug)]
pub struct BipartiteState {
    matrix: ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
}

impl BipartiteState {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Total dimension `dim_a * dim_b`.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// Constructor for matrices already known to be valid density
    /// operators with the given split (marginals of valid states, exact
    /// analytic families). Skips revalidation so entries stay bit-exact.
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, dim_a: usize, dim_b: usize) -> Self {
        debug_assert_eq!(matrix.dim(), dim_a * dim_b);
        BipartiteState { matrix, dim_a, dim_b }
    }

    /// Reduced state on one subsystem, returned as an unconditional state
    /// (the other dimension collapses to 1).
    pub fn marginal(&self, sys: System) -> BipartiteState {
        let keep = match sys {
            System::A => [0usize],
            System::B => [1usize],
        };
        let m = linalg::partial_trace(self.matrix(), &[self.dim_a, self.dim_b], &keep)
            .expect("state dims are consistent by construction");
        match sys {
            System::A => BipartiteState::from_parts_unchecked(m, self.dim_a, 1),
            System::B => BipartiteState::from_parts_unchecked(m, self.dim_b, 1),
        }
    }

    /// Embeds into larger local dimensions by padding each factor with
    /// unused basis directions. The spectrum gains zeros and nothing else.
    pub fn embed(&self, new_a: usize, new_b: usize) -> Result<BipartiteState, StateError> {
        if new_a < self.dim_a {
            return Err(linalg::LinalgError::ShrinkNotAllowed { from: self.dim_a, to: new_a }.into());
        }
        if new_b < self.dim_b {
            return Err(linalg::LinalgError::ShrinkNotAllowed { from: self.dim_b, to: new_b }.into());
        }
        let (da, db) = (self.dim_a, self.dim_b);
        let m = ComplexMatrix::from_fn(new_a * new_b, new_a * new_b, |r, c| {
            let (ra, rb) = (r / new_b, r % new_b);
            let (ca, cb) = (c / new_b, c % new_b);
            if ra < da && rb < db && ca < da && cb < db {
                self.matrix[(ra * db + rb, ca * db + cb)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(BipartiteState::from_parts_unchecked(m, new_a, new_b))
    }
}

/// Validates a candidate density matrix and wraps it with its bipartition.
///
/// Tolerances: Hermiticity within [`tol::EPS_HERM`], eigenvalues at least
/// `-EPS_PSD`, trace within [`tol::EPS_TRACE`] of one. In-tolerance defects
/// are repaired (clip negative eigenvalues, renormalize); anything worse is
/// a [`StateError::NotDensityMatrix`].
pub fn make_state(
    matrix: ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
) -> Result<BipartiteState, StateError> {
    let expected = dim_a * dim_b;
    if dim_a == 0 || dim_b == 0 || !matrix.is_square() || matrix.dim() != expected {
        return Err(StateError::DimensionMismatch {
            expected,
            got: matrix.rows(),
            dim_a,
            dim_b,
        });
    }
    let herm = matrix.herm_residual();
    if herm > tol::EPS_HERM {
        return Err(StateError::NotDensityMatrix { invariant: "hermiticity", magnitude: herm });
    }
    let sym = matrix.hermitize();
    let spec = linalg::eig_hermitian(&sym)?;
    let min_eig = spec.values.last().copied().unwrap_or(0.0);
    if min_eig < -tol::EPS_PSD {
        return Err(StateError::NotDensityMatrix { invariant: "positivity", magnitude: -min_eig });
    }
    let tr = sym.trace().re;
    if (tr - 1.0).abs() > tol::EPS_TRACE {
        return Err(StateError::NotDensityMatrix { invariant: "trace", magnitude: (tr - 1.0).abs() });
    }
    let needs_repair = min_eig < 0.0 || (tr - 1.0).abs() > 1e-15 || herm > 0.0;
    let matrix = if needs_repair {
        let clipped: Vec<f64> = spec.values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let renorm: Vec<f64> = clipped.iter().map(|&v| v / total).collect();
        spec.assemble(&renorm)
    } else {
        sym
    };
    Ok(BipartiteState { matrix, dim_a, dim_b })
}

/// Maximally mixed state `I/d` as an unconditional state (dims `(d, 1)`).
pub fn uniform(d: usize) -> BipartiteState {
    assert!(d > 0, "uniform(0)");
    let m = ComplexMatrix::identity(d).scale(1.0 / d as f64);
    BipartiteState::from_parts_unchecked(m, d, 1)
}

/// Maximally entangled state `Phi_k = |phi><phi|` with
/// `|phi> = sum_i |ii> / sqrt(k)`, dims `(k, k)`.
pub fn maximally_entangled(k: usize) -> BipartiteState {
    assert!(k > 0, "maximally_entangled(0)");
    let inv = 1.0 / k as f64;
    let mut m = ComplexMatrix::zeros(k * k, k * k);
    for i in 0..k {
        for j in 0..k {
            m[(i * k + i, j * k + j)] = Complex64::new(inv, 0.0);
        }
    }
    BipartiteState::from_parts_unchecked(m, k, k)
}

/// Embeds a classical joint distribution as the diagonal state
/// `sum_{x,y} P(x,y) |x><x| (x) |y><y|` with dims `(rows, cols)`.
pub fn classical_embed(joint: &ClassicalJoint) -> BipartiteState {
    let (rows, cols) = joint.shape();
    let mut m = ComplexMatrix::zeros(rows * cols, rows * cols);
    for x in 0..rows {
        for y in 0..cols {
            let idx = x * cols + y;
            m[(idx, idx)] = Complex64::new(joint.prob(x, y), 0.0);
        }
    }
    BipartiteState::from_parts_unchecked(m, rows, cols)
}

/// Tensor product of two bipartite states, arranged back into bipartite
/// form: `A` systems together, `B` systems together, so the result has
/// dims `(a1*a2, b1*b2)`.
pub fn tensor(rho: &BipartiteState, sigma: &BipartiteState) -> BipartiteState {
    let m = linalg::kron(rho.matrix(), sigma.matrix());
    let dims = [rho.dim_a(), rho.dim_b(), sigma.dim_a(), sigma.dim_b()];
    let arranged = linalg::permute_systems(&m, &dims, &[0, 2, 1, 3])
        .expect("tensor arrangement dims are consistent");
    BipartiteState::from_parts_unchecked(arranged, rho.dim_a() * sigma.dim_a(), rho.dim_b() * sigma.dim_b())
}

/// Random-state ensembles understood by [`sample_random`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    /// `G G^dag / Tr[G G^dag]` with `G` an `n x n` standard complex
    /// Gaussian matrix; full rank almost surely.
    Ginibre,
    /// Convex mixture of `terms` product Ginibre states with flat
    /// Dirichlet weights; separable by construction.
    Separable { terms: usize },
    /// Haar-random pure state projector.
    Pure,
}

/// Stream tag for state sampling; see [`crate::rng`] for the scheme.
const STREAM_STATES: u64 = 0x53_54_41_54; // "STAT"

/// Draws a reproducible random state of the requested ensemble.
pub fn sample_random(dims: (usize, usize), kind: SampleKind, seed: u64) -> BipartiteState {
    let (da, db) = dims;
    assert!(da > 0 && db > 0, "sample_random with zero dimension");
    let n = da * db;
    let mut rng = Rng::new(seed, STREAM_STATES);
    let matrix = match kind {
        SampleKind::Ginibre => ginibre_matrix(n, &mut rng),
        SampleKind::Pure => {
            let mut v: Vec<Complex64> = (0..n).map(|_| rng.complex_gaussian()).collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut v {
                *z /= norm;
            }
            ComplexMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj())
        }
        SampleKind::Separable { terms } => {
            assert!(terms > 0, "separable mixture needs at least one term");
            let weights = rng.dirichlet(terms);
            let mut m = ComplexMatrix::zeros(n, n);
            for &w in &weights {
                let sa = ginibre_matrix(da, &mut rng);
                let sb = ginibre_matrix(db, &mut rng);
                m = m.add(&linalg::kron(&sa, &sb).scale(w));
            }
            m
        }
    };
    make_state(matrix, da, db).expect("sampled matrices are valid by construction")
}

fn ginibre_matrix(n: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_gaussian());
    let m = g.mul(&g.adjoint());
    let tr = m.trace().re;
    m.scale(1.0 / tr)
}

/// Haar-random unitary: Gram-Schmidt orthonormalization of a complex
/// Gaussian matrix (QR with the positive-diagonal phase convention).
pub fn random_unitary(d: usize, rng: &mut Rng) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
    let mut cols: Vec<Vec<Complex64>> = (0..d).map(|c| (0..d).map(|r| g[(r, c)]).collect()).collect();
    for j in 0..d {
        // two orthogonalization passes keep loss of orthogonality near eps
        for _pass in 0..2 {
            for i in 0..j {
                let proj: Complex64 =
                    cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let prev = cols[i].clone();
                for (x, p) in cols[j].iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut cols[j] {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// Haar-random isometry `V: C^{cols} -> C^{rows}` (first columns of a
/// random unitary), so `V^dag V = I`.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs rows >= cols");
    let u = random_unitary(rows, rng);
    ComplexMatrix::from_fn(rows, cols, |r, c| u[(r, c)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_entangled_have_expected_entries() {
        let u = uniform(3);
        assert_eq!((u.dim_a(), u.dim_b()), (3, 1));
        assert!((u.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!((u.matrix()[(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);

        let phi = maximally_entangled(2);
        assert_eq!((phi.dim_a(), phi.dim_b()), (2, 2));
        for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((phi.matrix()[(r, c)].re - 0.5).abs() < 1e-15, "entry ({r},{c})");
        }
        assert!(phi.matrix()[(1, 1)].norm() < 1e-15);
        assert!((phi.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn make_state_rejects_each_violation_by_name() {
        // trace
        let m = ComplexMatrix::identity(2);
        match make_state(m, 2, 1) {
            Err(StateError::NotDensityMatrix { invariant: "trace", magnitude }) => {
                assert!((magnitude - 1.0).abs() < 1e-12)
            }
            other => panic!("expected trace violation, got {other:?}"),
        }
        // positivity
        let m = ComplexMatrix::from_diag(&[1.5, -0.5]);
        match make_state(m, 2, 1) {
            Err(StateError::NotDensityMatrix { invariant: "positivity", magnitude }) => {
                assert!((magnitude - 0.5).abs() < 1e-12)
            }
            other => panic!("expected positivity violation, got {other:?}"),
        }
        // hermiticity
        let mut m = ComplexMatrix::from_diag(&[0.5, 0.5]);
        m[(0, 1)] = Complex64::new(0.0, 1e-3);
        match make_state(m, 2, 1) {
            Err(StateError::NotDensityMatrix { invariant: "hermiticity", .. }) => {}
            other => panic!("expected hermiticity violation, got {other:?}"),
        }
        // dimension
        let m = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        assert!(matches!(make_state(m, 2, 2), Err(StateError::DimensionMismatch { .. })));
    }

    #[test]
    fn make_state_repairs_in_tolerance_defects() {
        // an eigenvalue at -5e-10 is inside EPS_PSD and gets clipped
        let m = ComplexMatrix::from_diag(&[1.0 + 5e-10, -5e-10]);
        let st = make_state(m, 2, 1).unwrap();
        let spec = linalg::eig_hermitian(st.matrix()).unwrap();
        assert!(spec.values.iter().all(|&v| v >= 0.0), "clipped spectrum {:?}", spec.values);
        assert!((st.matrix().trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampling_is_reproducible_and_valid() {
        for kind in [SampleKind::Ginibre, SampleKind::Pure, SampleKind::Separable { terms: 4 }] {
            let a = sample_random((2, 3), kind, 99);
            let b = sample_random((2, 3), kind, 99);
            assert_eq!(a.matrix().data(), b.matrix().data(), "same seed, same state");
            let c = sample_random((2, 3), kind, 100);
            assert!(a.matrix().sub(c.matrix()).max_abs() > 1e-6, "different seed differs");
            let spec = linalg::eig_hermitian(a.matrix()).unwrap();
            assert!(spec.values.iter().all(|&v| v >= -1e-12));
            assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_states_have_rank_one() {
        let st = sample_random((2, 2), SampleKind::Pure, 7);
        let spec = linalg::eig_hermitian(st.matrix()).unwrap();
        assert!((spec.values[0] - 1.0).abs() < 1e-12);
        assert!(spec.values[1].abs() < 1e-12);
    }

    #[test]
    fn marginals_of_products_factorize() {
        let rho_a = sample_random((2, 1), SampleKind::Ginibre, 3);
        let rho_b = sample_random((3, 1), SampleKind::Ginibre, 4);
        let joint = make_state(
            linalg::kron(rho_a.matrix(), rho_b.matrix()),
            2,
            3,
        )
        .unwrap();
        let ma = joint.marginal(System::A);
        let mb = joint.marginal(System::B);
        assert!(ma.matrix().sub(rho_a.matrix()).max_abs() < 1e-12);
        assert!(mb.matrix().sub(rho_b.matrix()).max_abs() < 1e-12);
        assert_eq!((ma.dim_a(), ma.dim_b()), (2, 1));
        assert_eq!((mb.dim_a(), mb.dim_b()), (3, 1));
    }

    #[test]
    fn embedding_pads_with_zero_spectrum() {
        let st = sample_random((2, 2), SampleKind::Ginibre, 11);
        let e = st.embed(3, 4).unwrap();
        assert_eq!((e.dim_a(), e.dim_b()), (3, 4));
        let s0 = linalg::eig_hermitian(st.matrix()).unwrap().values;
        let s1 = linalg::eig_hermitian(e.matrix()).unwrap().values;
        for (a, b) in s0.iter().zip(&s1) {
            assert!((a - b).abs() < 1e-10);
        }
        for &v in &s1[4..] {
            assert!(v.abs() < 1e-12);
        }
        assert!(st.embed(1, 2).is_err(), "shrinking must fail");
    }

    #[test]
    fn tensor_groups_systems_correctly() {
        // product of pure |0><0| states keeps its rank-one corner structure
        let rho = sample_random((2, 2), SampleKind::Ginibre, 21);
        let sigma = sample_random((2, 3), SampleKind::Ginibre, 22);
        let t = tensor(&rho, &sigma);
        assert_eq!((t.dim_a(), t.dim_b()), (4, 6));
        // marginals factorize: A-marginal of tensor = kron of A-marginals
        let ma = t.marginal(System::A);
        let want = linalg::kron(rho.marginal(System::A).matrix(), sigma.marginal(System::A).matrix());
        assert!(ma.matrix().sub(&want).max_abs() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = Rng::new(5, 77);
        for &d in &[2usize, 3, 5] {
            let u = random_unitary(d, &mut rng);
            let gram = u.adjoint().mul(&u);
            assert!(gram.sub(&ComplexMatrix::identity(d)).max_abs() < 1e-12, "d={d}");
        }
        let v = random_isometry(5, 2, &mut rng);
        let gram = v.adjoint().mul(&v);
        assert!(gram.sub(&ComplexMatrix::identity(2)).max_abs() < 1e-12);
    }
}
