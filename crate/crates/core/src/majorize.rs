//! Majorization in four flavors: spectral partial sums, the equivalent
//! unital-channel SDP, conditional majorization between bipartite states,
//! and its classical specialization as a linear program.
//!
//! The spectral order is the classical one: `rho` majorizes `sigma` when
//! every leading partial sum of the decreasing spectrum of `rho` dominates
//! the corresponding sum for `sigma` (spectra padded with zeros to a common
//! length). Equivalently, a unital channel maps `rho` to `sigma`; the SDP
//! response checks that formulation directly and must agree.
//!
//! Conditional majorization replaces "unital channel" by "conditionally
//! unital, semi-causal channel" acting on a bipartite state: `rho`
//! conditionally majorizes `sigma` with respect to `A` when some such
//! channel, with an `A`-output the same size as its `A`-input, maps `rho`
//! to `sigma`. The channel may process the conditioning memory `B` freely
//! but acts unitally on `A` for every `B` input; mismatched `A` dimensions
//! are handled by isometric embedding on the smaller side. Feasibility of
//! the corresponding Choi-matrix SDP is the decision procedure. Dropping
//! the semi-causality constraint gives the relaxed one-sided order also
//! exposed here.
//!
//! The classical case restricts everything to diagonal (joint
//! distribution) states, where the channel decomposes into a conditional
//! mixture of doubly stochastic maps and the decision collapses to an LP.

use num_complex::Complex64;
use thiserror::Error;

use crate::channels::{self, ChoiChannel};
use crate::linalg::{self, ComplexMatrix};
use crate::rng::Rng;
use crate::sdp::{self, BlockSpec, BlockValue, Equality, Functional};
use crate::states::{self, BipartiteState, System};
use crate::tol;

const STREAM_MAJORIZE: u64 = 0x4d414a; // "MAJ"

/// Classical joint probability distribution `P(x, y)` with `x` the
/// majorization-relevant coordinate and `y` the conditioning coordinate.
#[derive(Clone, Debug)]
pub struct ClassicalJoint {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

/// Errors from majorization decisions.
#[derive(Debug, Error)]
pub enum MajorizeError {
    /// Conditional majorization with a larger `A'` on the right needs the
    /// right-hand marginal to fit in the left-hand conditioning space.
    #[error("rank obstruction: sigma's A-marginal has rank {rank} > {limit}")]
    RankObstruction { rank: usize, limit: usize },
    #[error("invalid classical joint: {reason}")]
    InvalidJoint { reason: String },
    #[error(transparent)]
    Sdp(#[from] crate::sdp::SdpError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    State(#[from] crate::states::StateError),
}

impl ClassicalJoint {
    /// Builds a joint distribution from row-major entries; requires
    /// nonnegative entries summing to 1 within [`tol::EPS_TRACE`].
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self, MajorizeError> {
        if rows == 0 || cols == 0 || probs.len() != rows * cols {
            return Err(MajorizeError::InvalidJoint {
                reason: format!("{}x{} shape needs {} entries, got {}", rows, cols, rows * cols, probs.len()),
            });
        }
        if let Some(&bad) = probs.iter().find(|&&p| p < -1e-15 || !p.is_finite()) {
            return Err(MajorizeError::InvalidJoint { reason: format!("entry {bad} out of range") });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol::EPS_TRACE {
            return Err(MajorizeError::InvalidJoint { reason: format!("entries sum to {total}") });
        }
        let probs = probs.iter().map(|&p| p.max(0.0) / total).collect();
        Ok(ClassicalJoint { rows, cols, probs })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    /// Column `y` as a vector over `x` (unnormalized conditional).
    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.rows).map(|x| self.prob(x, y)).collect()
    }
}

/// Feasible assignment certifying a classical conditional majorization:
/// the mixing weights `t[y][w]` and, for each pair with positive weight,
/// the doubly stochastic matrix applied to column `y`.
#[derive(Clone, Debug)]
pub struct ClassicalWitness {
    /// Row-stochastic mixing weights, indexed `[y][w]`.
    pub t: Vec<Vec<f64>>,
    /// Scaled transport matrices `M[y][w]`, row-major `m x m`; dividing by
    /// `t[y][w]` (when positive) recovers a doubly stochastic matrix.
    pub m: Vec<Vec<Vec<f64>>>,
}

/// Certificate attached to a positive majorization verdict.
#[derive(Clone, Debug)]
pub enum Witness {
    /// Choi matrix of a channel mapping the left state to the right one.
    Channel(crate::channels::ChoiChannel),
    /// LP assignment for the classical decision.
    Assignment(ClassicalWitness),
}

/// Outcome of a majorization decision.
#[derive(Clone, Debug)]
pub struct MajorizationVerdict {
    pub holds: bool,
    /// Decision margin: the minimum partial-sum gap for the spectral test
    /// (negative when violated), or the minimized phase-1 slack for
    /// SDP/LP-based decisions (zero up to tolerance when feasible; for
    /// decisively infeasible systems a certified lower bound on the slack
    /// may be reported instead of the converged value). Ties at the
    /// feasibility threshold resolve to `holds = false`.
    pub margin: f64,
    /// Feasible channel or assignment backing a positive verdict, when the
    /// decision procedure produces one.
    pub witness: Option<Witness>,
}

/// Spectral majorization test via partial sums of decreasing spectra,
/// padded with zeros to a common length.
pub fn majorizes(rho: &BipartiteState, sigma: &BipartiteState) -> Result<MajorizationVerdict, MajorizeError> {
    let lr = linalg::eig_hermitian(rho.matrix())?.values;
    let ls = linalg::eig_hermitian(sigma.matrix())?.values;
    let n = lr.len().max(ls.len());
    let mut margin = f64::INFINITY;
    let mut sum_r = 0.0;
    let mut sum_s = 0.0;
    for k in 0..n {
        sum_r += lr.get(k).copied().unwrap_or(0.0).max(0.0);
        sum_s += ls.get(k).copied().unwrap_or(0.0).max(0.0);
        margin = margin.min(sum_r - sum_s);
    }
    Ok(MajorizationVerdict { holds: margin >= -tol::EPS_MAJ, margin, witness: None })
}

/// Majorization via the unital-channel formulation: feasibility of a Choi
/// variable `J` with `J >= 0`, `Tr_out J = I`, `Tr_in J = I`, and
/// `Tr_in[J (rho^T (x) I)] = sigma`. Dimensions are equalized by zero
/// padding. Must agree with [`majorizes`].
pub fn majorizes_via_sdp(
    rho: &BipartiteState,
    sigma: &BipartiteState,
) -> Result<MajorizationVerdict, MajorizeError> {
    let sr = linalg::eig_hermitian(rho.matrix())?;
    let ss = linalg::eig_hermitian(sigma.matrix())?;
    let d = rho.dim().max(sigma.dim());
    // Rotating each state to its eigenbasis composes unitary (hence
    // unital) channels onto both sides of the candidate, so feasibility
    // is unchanged; the data becomes exactly real and diagonal, which
    // admits a real symmetric Choi witness whenever any witness exists.
    let rho_d = ComplexMatrix::from_diag(&padded_spectrum(&sr.values, d));
    let sigma_d = ComplexMatrix::from_diag(&padded_spectrum(&ss.values, d));
    let mut sys = ChoiSystem::new(Encoding::RealSym, d * d);
    let eye = ComplexMatrix::identity(d);
    for k in sys.state_basis(d) {
        let tr = k.trace().re;
        sys.push(&linalg::kron(&k, &eye), tr);
        sys.push(&linalg::kron(&eye, &k), tr);
        sys.push(&linalg::kron(&rho_d, &k), sigma_d.inner_re(&k));
    }
    let feas = sys.decide()?;
    let holds = feas.feasible && feas.slack < tol::EPS_FEAS;
    let witness = if holds {
        feas.witness
            .as_ref()
            .and_then(|w| sys.extract_choi(&w[0]))
            .and_then(|j| sanitize_choi(&j, (d, 1, d, 1)))
            .and_then(|mid| undo_rotations(&mid, &sr.vectors, &ss.vectors, d))
            .map(Witness::Channel)
    } else {
        None
    };
    Ok(MajorizationVerdict { holds, margin: feas.slack, witness })
}

/// Which channel family decides the conditional order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CondMode {
    /// Conditionally unital and semi-causal: the defining class of
    /// conditional majorization.
    LocallyBalanced,
    /// Conditional unitality only: the relaxed one-sided order. Every
    /// locally balanced transition is also a transition here.
    ConditionallyUnital,
}

/// Conditional majorization: does a channel of the given family map
/// `rho_AB` to `sigma`, acting on `A` with an equal-sized output?
///
/// When `sigma`'s `A` system is smaller it is padded with zero rows; when
/// larger, its `A` marginal must fit in a `dim_a(rho)`-dimensional
/// subspace (else [`MajorizeError::RankObstruction`]) and is rotated into
/// the leading coordinates. A returned witness therefore maps `rho` to
/// the dimension-adjusted right-hand state: its output dims are
/// `(dim_a(rho), dim_b(sigma))`.
pub fn cond_majorizes(
    rho: &BipartiteState,
    sigma: &BipartiteState,
    mode: CondMode,
) -> Result<MajorizationVerdict, MajorizeError> {
    let (a, b) = (rho.dim_a(), rho.dim_b());
    let sigma_t = align_conditioner(sigma, a)?;
    let bp = sigma_t.dim_b();
    let enc = Encoding::for_data(&[rho.matrix(), sigma_t.matrix()]);
    let side = a * b * a * bp;
    let mut sys = ChoiSystem::new(enc, side);

    // trace preservation: Tr_{out} J = I_{AB}
    let eye_out = ComplexMatrix::identity(a * bp);
    for k in sys.state_basis(a * b) {
        let tr = k.trace().re;
        sys.push(&linalg::kron(&k, &eye_out), tr);
    }
    // conditional unitality: Tr_A J carries no traceless component on the
    // A-output, i.e. Tr[(G_{BB'} (x) F_A') Tr_A J] = 0 for traceless F
    let eye_a = ComplexMatrix::identity(a);
    for (g, f) in sys.lemma_pairs(b * bp, a) {
        let arranged = linalg::permute_systems(&linalg::kron(&g, &f), &[b, bp, a], &[0, 2, 1])
            .expect("dims match construction");
        sys.push(&linalg::kron(&eye_a, &arranged), 0.0);
    }
    // semi-causality: Tr_{A'} J carries no traceless component on the
    // A-input, so nothing about A leaks to B'
    if mode == CondMode::LocallyBalanced {
        for (g, f) in sys.lemma_pairs(b * bp, a) {
            let block = linalg::kron(&linalg::kron(&f, &g), &eye_a);
            let arranged = linalg::permute_systems(&block, &[a, b, bp, a], &[0, 1, 3, 2])
                .expect("dims match construction");
            sys.push(&arranged, 0.0);
        }
    }
    // output matching: Tr_{AB}[J (rho^T (x) I)] = sigma
    let rho_t = rho.matrix().transpose();
    for k in sys.state_basis(a * bp) {
        sys.push(&linalg::kron(&rho_t, &k), sigma_t.matrix().inner_re(&k));
    }

    let feas = sys.decide()?;
    let holds = feas.feasible && feas.slack < tol::EPS_FEAS;
    let witness = if holds {
        feas.witness
            .as_ref()
            .and_then(|w| sys.extract_choi(&w[0]))
            .and_then(|j| sanitize_choi(&j, (a, b, a, bp)))
            .map(Witness::Channel)
    } else {
        None
    };
    Ok(MajorizationVerdict { holds, margin: feas.slack, witness })
}

/// Classical conditional majorization as a linear program: `P` reaches `Q`
/// iff there are row-stochastic weights `t_yw` and doubly stochastic
/// `D_(y,w)` with `q_w = sum_y t_yw D_(y,w) p_y`. Variables are the scaled
/// transports `M_(y,w) = t_yw D_(y,w)`, which keeps every constraint
/// linear. X-dimensions are equalized by zero-row padding.
pub fn classical_cond_majorizes(
    p: &ClassicalJoint,
    q: &ClassicalJoint,
) -> Result<MajorizationVerdict, MajorizeError> {
    let (mp, n) = p.shape();
    let (mq, l) = q.shape();
    let m = mp.max(mq);
    let pad = |col: Vec<f64>| {
        let mut padded = col;
        padded.resize(m, 0.0);
        padded
    };
    let p_cols: Vec<Vec<f64>> = (0..n).map(|y| pad(p.column(y))).collect();
    let q_cols: Vec<Vec<f64>> = (0..l).map(|w| pad(q.column(w))).collect();

    // block 0: entries of all M_(y,w) row-major; block 1: the t_yw grid
    let blocks = [BlockSpec::Nonneg(n * l * m * m), BlockSpec::Nonneg(n * l)];
    let midx = |y: usize, w: usize, r: usize, c: usize| ((y * l + w) * m + r) * m + c;
    let mut eqs = Vec::new();
    for y in 0..n {
        for w in 0..l {
            for k in 0..m {
                let mut row = Functional::new();
                let mut col = Functional::new();
                for j in 0..m {
                    row = row.lin_entry(0, midx(y, w, k, j), 1.0);
                    col = col.lin_entry(0, midx(y, w, j, k), 1.0);
                }
                eqs.push(Equality::new(row.lin_entry(1, y * l + w, -1.0), 0.0));
                eqs.push(Equality::new(col.lin_entry(1, y * l + w, -1.0), 0.0));
            }
        }
        let mut norm = Functional::new();
        for w in 0..l {
            norm = norm.lin_entry(1, y * l + w, 1.0);
        }
        eqs.push(Equality::new(norm, 1.0));
    }
    for w in 0..l {
        for r in 0..m {
            let mut out = Functional::new();
            for y in 0..n {
                for c in 0..m {
                    if p_cols[y][c] != 0.0 {
                        out = out.lin_entry(0, midx(y, w, r, c), p_cols[y][c]);
                    }
                }
            }
            eqs.push(Equality::new(out, q_cols[w][r]));
        }
    }

    let feas = sdp::check_feasible_with(&blocks, &eqs, true, true, true)?;
    let holds = feas.feasible && feas.slack < tol::EPS_FEAS;
    let witness = if holds {
        feas.witness.as_ref().and_then(|vals| {
            let (BlockValue::Nonneg(ms), BlockValue::Nonneg(ts)) = (&vals[0], &vals[1]) else {
                return None;
            };
            let t = (0..n)
                .map(|y| (0..l).map(|w| ts[y * l + w].max(0.0)).collect())
                .collect();
            let grids = (0..n)
                .map(|y| {
                    (0..l)
                        .map(|w| {
                            (0..m * m).map(|k| ms[midx(y, w, 0, 0) + k].max(0.0)).collect()
                        })
                        .collect()
                })
                .collect();
            Some(Witness::Assignment(ClassicalWitness { t, m: grids }))
        })
    } else {
        None
    };
    Ok(MajorizationVerdict { holds, margin: feas.slack, witness })
}

/// Shape of the Choi variable handed to the solver. The choice is a
/// conservative, exact reduction of the search space:
///
/// - Diagonal: when every state datum is exactly diagonal, twirling any
///   feasible channel by independent uniform diagonal phases on each
///   subsystem (input and output) fixes the states and every constraint
///   family while averaging the Choi matrix onto its diagonal, so a
///   diagonal witness exists iff any does. The cone collapses to a
///   nonnegative vector and the decision becomes an LP.
/// - RealSym: when the data is exactly real, entrywise conjugation maps
///   witnesses to witnesses, so `(J + conj J)/2` shows a real symmetric
///   witness exists iff any does. The block stays at the natural side
///   instead of the doubled real embedding.
/// - ComplexHerm: the general case via the 2n x 2n real embedding.
#[derive(Clone, Copy, Debug)]
enum Encoding {
    Diagonal,
    RealSym,
    ComplexHerm,
}

impl Encoding {
    fn for_data(ms: &[&ComplexMatrix]) -> Encoding {
        if ms.iter().all(|m| exactly_diagonal(m)) {
            Encoding::Diagonal
        } else if ms.iter().all(|m| exactly_real(m)) {
            Encoding::RealSym
        } else {
            Encoding::ComplexHerm
        }
    }
}

fn exactly_real(m: &ComplexMatrix) -> bool {
    m.data().iter().all(|z| z.im == 0.0)
}

fn exactly_diagonal(m: &ComplexMatrix) -> bool {
    let cols = m.cols();
    m.data()
        .iter()
        .enumerate()
        .all(|(k, z)| z.im == 0.0 && (k / cols == k % cols || z.re == 0.0))
}

/// Accumulates equality rows over one Choi-matrix variable, materializing
/// each coefficient matrix according to the encoding.
struct ChoiSystem {
    enc: Encoding,
    side: usize,
    eqs: Vec<Equality>,
}

impl ChoiSystem {
    fn new(enc: Encoding, side: usize) -> ChoiSystem {
        ChoiSystem { enc, side, eqs: Vec::new() }
    }

    fn block(&self) -> BlockSpec {
        match self.enc {
            Encoding::Diagonal => BlockSpec::Nonneg(self.side),
            Encoding::RealSym => BlockSpec::Psd(self.side),
            Encoding::ComplexHerm => BlockSpec::Psd(2 * self.side),
        }
    }

    fn push(&mut self, coef: &ComplexMatrix, rhs: f64) {
        debug_assert_eq!(coef.dim(), self.side);
        let mut f = Functional::new();
        match self.enc {
            Encoding::Diagonal => {
                for k in 0..self.side {
                    let v = coef[(k, k)].re;
                    if v != 0.0 {
                        f = f.lin_entry(0, k, v);
                    }
                }
            }
            Encoding::RealSym => f.add_real_symmetric(0, coef, 1.0),
            Encoding::ComplexHerm => f.add_hermitian(0, coef, 1.0),
        }
        // rows the restricted variable satisfies identically carry no
        // information; keep contradictory ones so they fail feasibility
        if f.is_empty() && rhs == 0.0 {
            return;
        }
        self.eqs.push(Equality::new(f, rhs));
    }

    /// Spanning set for the Hermitian matrices visible to the encoding.
    fn state_basis(&self, d: usize) -> Vec<ComplexMatrix> {
        match self.enc {
            Encoding::Diagonal => diag_units(d),
            Encoding::RealSym => linalg::symmetric_basis(d),
            Encoding::ComplexHerm => linalg::hermitian_basis(d),
        }
    }

    /// Pairs `(G, F)` with `F` traceless whose products `G (x) F` span the
    /// test space for the marginal-structure lemmas.
    fn lemma_pairs(&self, dg: usize, df: usize) -> Vec<(ComplexMatrix, ComplexMatrix)> {
        let mut pairs = Vec::new();
        match self.enc {
            Encoding::Diagonal => {
                for g in diag_units(dg) {
                    for f in diag_diffs(df) {
                        pairs.push((g.clone(), f));
                    }
                }
            }
            Encoding::RealSym => {
                // sym (x) sym and antisym (x) antisym both land in the
                // symmetric matrices; together they span its intersection
                // with the traceless-F test space
                for g in linalg::symmetric_basis(dg) {
                    for f in traceless_symmetric_basis(df) {
                        pairs.push((g.clone(), f));
                    }
                }
                for g in linalg::antisymmetric_basis(dg) {
                    for f in linalg::antisymmetric_basis(df) {
                        pairs.push((g.clone(), f));
                    }
                }
            }
            Encoding::ComplexHerm => {
                for g in linalg::hermitian_basis(dg) {
                    for f in traceless_hermitian_basis(df) {
                        pairs.push((g.clone(), f));
                    }
                }
            }
        }
        pairs
    }

    fn decide(&self) -> Result<sdp::Feasibility, sdp::SdpError> {
        sdp::check_feasible_with(&[self.block()], &self.eqs, true, true, true)
    }

    fn extract_choi(&self, value: &BlockValue) -> Option<ComplexMatrix> {
        match self.enc {
            Encoding::Diagonal => {
                let BlockValue::Nonneg(xs) = value else { return None };
                let clipped: Vec<f64> = xs.iter().map(|&v| v.max(0.0)).collect();
                Some(ComplexMatrix::from_diag(&clipped))
            }
            Encoding::RealSym => {
                let BlockValue::Psd { n, mat } = value else { return None };
                Some(ComplexMatrix::from_fn(*n, *n, |r, c| {
                    Complex64::new(0.5 * (mat[r * n + c] + mat[c * n + r]), 0.0)
                }))
            }
            Encoding::ComplexHerm => sdp::extract_hermitian(value).ok(),
        }
    }
}

fn diag_units(d: usize) -> Vec<ComplexMatrix> {
    (0..d)
        .map(|p| {
            let mut e = vec![0.0; d];
            e[p] = 1.0;
            ComplexMatrix::from_diag(&e)
        })
        .collect()
}

/// Traceless diagonal spanning set: consecutive differences.
fn diag_diffs(d: usize) -> Vec<ComplexMatrix> {
    (0..d.saturating_sub(1))
        .map(|p| {
            let mut e = vec![0.0; d];
            e[p] = 1.0;
            e[p + 1] = -1.0;
            ComplexMatrix::from_diag(&e)
        })
        .collect()
}

fn traceless_symmetric_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = diag_diffs(d);
    basis.extend(linalg::symmetric_basis(d).into_iter().filter(|m| m.trace().re == 0.0));
    basis
}

fn traceless_hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = diag_diffs(d);
    basis.extend(linalg::hermitian_basis(d).into_iter().filter(|m| m.trace() == Complex64::new(0.0, 0.0)));
    basis
}

fn padded_spectrum(values: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|k| values.get(k).copied().unwrap_or(0.0).max(0.0)).collect()
}

/// Repairs a numerically feasible Choi matrix into a validated channel:
/// hermitize, clip negative eigenvalues, then restore exact trace
/// preservation by conjugating the input slot with `(Tr_out J)^{-1/2}`.
/// Returns `None` when the matrix is too degenerate to repair.
fn sanitize_choi(j: &ComplexMatrix, dims: (usize, usize, usize, usize)) -> Option<ChoiChannel> {
    let d_in = dims.0 * dims.1;
    let d_out = dims.2 * dims.3;
    let spec = linalg::eig_hermitian(&j.hermitize()).ok()?;
    let clipped: Vec<f64> = spec.values.iter().map(|&v| v.max(0.0)).collect();
    let psd = spec.assemble(&clipped);
    let traced = linalg::partial_trace(&psd, &[d_in, d_out], &[0]).ok()?;
    let correction = linalg::hermitian_function(&traced, linalg::MatrixFunction::PinvSqrt).ok()?;
    let m = linalg::kron(&correction, &ComplexMatrix::identity(d_out));
    let fixed = m.mul(&psd).mul(&m.adjoint());
    ChoiChannel::new(fixed, dims).ok()
}

/// Extends a unitary to a larger space by acting as the identity on the
/// appended directions.
fn pad_unitary(u: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let d0 = u.dim();
    ComplexMatrix::from_fn(d, d, |r, c| {
        if r < d0 && c < d0 {
            u[(r, c)]
        } else if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Conjugates the eigenbasis-frame witness back to the callers' bases:
/// `X -> V N(U^dag X U) V^dag` with `U`, `V` the eigenvector unitaries.
fn undo_rotations(
    mid: &ChoiChannel,
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    d: usize,
) -> Option<ChoiChannel> {
    let dims = (d, 1, d, 1);
    let into = channels::choi_from_kraus(&[pad_unitary(&u.adjoint(), d)], dims).ok()?;
    let outof = channels::choi_from_kraus(&[pad_unitary(v, d)], dims).ok()?;
    let first = channels::compose(mid, &into).ok()?;
    channels::compose(&outof, &first).ok()
}

/// Brings `sigma`'s conditioning system to dimension `a`: pad with zero
/// rows when smaller; when larger, rotate the `A` marginal's support into
/// the leading coordinates and cut, which is lossless exactly when the
/// support fits.
fn align_conditioner(sigma: &BipartiteState, a: usize) -> Result<BipartiteState, MajorizeError> {
    let ap = sigma.dim_a();
    let bp = sigma.dim_b();
    if ap == a {
        return Ok(sigma.clone());
    }
    if ap < a {
        return Ok(sigma.embed(a, bp)?);
    }
    let marginal = sigma.marginal(System::A);
    let spec = linalg::eig_hermitian(marginal.matrix())?;
    let rank = spec.values.iter().filter(|&&v| v > tol::EPS_SUPP).count();
    if rank > a {
        return Err(MajorizeError::RankObstruction { rank, limit: a });
    }
    // local unitaries on A' preserve the order, so rotate the marginal
    // diagonal (decreasing); all weight then sits in the leading block
    let w = linalg::kron(&spec.vectors.adjoint(), &ComplexMatrix::identity(bp));
    let rotated = w.mul(sigma.matrix()).mul(&w.adjoint());
    let cut = ComplexMatrix::from_fn(a * bp, a * bp, |r, c| rotated[(r, c)]);
    Ok(states::make_state(cut, a, bp)?)
}

/// Random joint distribution with i.i.d. uniform weights.
pub(crate) fn sample_joint(rows: usize, cols: usize, seed: u64) -> ClassicalJoint {
    let mut rng = Rng::new(seed, STREAM_MAJORIZE);
    let mut probs: Vec<f64> = (0..rows * cols).map(|_| rng.u01()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    ClassicalJoint::new(rows, cols, probs).expect("normalized by construction")
}

/// Feasible classical pair built from an explicit witness: random
/// row-stochastic `T`, random doubly stochastic `D_(y,w)` (mixtures of
/// permutations), and `q_w = sum_y t_yw D_(y,w) p_y`.
pub(crate) fn sample_feasible_classical_pair(
    m: usize,
    n: usize,
    l: usize,
    seed: u64,
) -> (ClassicalJoint, ClassicalJoint) {
    let mut rng = Rng::new(seed, STREAM_MAJORIZE ^ 0x77);
    let p = sample_joint(m, n, seed ^ 0x5eed);
    let mut q_probs = vec![0.0; m * l];
    for y in 0..n {
        let t_row = rng.dirichlet(l);
        let p_y = p.column(y);
        for (w, &t) in t_row.iter().enumerate() {
            let d = random_doubly_stochastic(m, &mut rng);
            for r in 0..m {
                for c in 0..m {
                    q_probs[r * l + w] += t * d[r * m + c] * p_y[c];
                }
            }
        }
    }
    let q = ClassicalJoint::new(m, l, q_probs).expect("stochastic maps preserve total mass");
    (p, q)
}

/// Doubly stochastic matrix as a random mixture of permutations.
fn random_doubly_stochastic(m: usize, rng: &mut Rng) -> Vec<f64> {
    let weights = rng.dirichlet(3);
    let mut d = vec![0.0; m * m];
    for &wt in &weights {
        let perm = rng.permutation(m);
        for (c, &r) in perm.iter().enumerate() {
            d[r * m + c] += wt;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply, check_properties, make_standard, StandardKind};
    use crate::entropy::{conditional_entropy, hmin, DivergenceKind};
    use crate::states::{
        classical_embed, make_state, maximally_entangled, random_unitary, sample_random, uniform,
        SampleKind,
    };

    fn pure(d: usize) -> BipartiteState {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        make_state(ComplexMatrix::from_diag(&e), d, 1).unwrap()
    }

    fn diag_state(entries: &[f64], da: usize, db: usize) -> BipartiteState {
        make_state(ComplexMatrix::from_diag(entries), da, db).unwrap()
    }

    /// Mixture of unitary conjugates: guaranteed to be majorized by `rho`.
    fn mixed_unitary_push(rho: &BipartiteState, seed: u64) -> BipartiteState {
        let mut rng = Rng::new(seed, STREAM_MAJORIZE ^ 0xa5);
        let d = rho.dim();
        let mut out = ComplexMatrix::zeros(d, d);
        let weights = rng.dirichlet(3);
        for &w in &weights {
            let u = random_unitary(d, &mut rng);
            out = out.add(&u.mul(rho.matrix()).mul(&u.adjoint()).scale(w));
        }
        make_state(out, rho.dim_a(), rho.dim_b()).unwrap()
    }

    fn uniform_conditional(rho: &BipartiteState) -> BipartiteState {
        let u = uniform(rho.dim_a());
        let m = linalg::kron(u.matrix(), rho.marginal(System::B).matrix());
        make_state(m, rho.dim_a(), rho.dim_b()).unwrap()
    }

    #[test]
    fn pure_state_majorizes_everything() {
        for seed in 0..4u64 {
            let rho = sample_random((3, 1), SampleKind::Ginibre, 100 + seed);
            assert!(majorizes(&pure(3), &rho).unwrap().holds);
            assert!(majorizes(&pure(2), &rho).unwrap().holds);
            assert!(majorizes(&pure(4), &rho).unwrap().holds);
        }
    }

    #[test]
    fn uniform_pair_margin_is_exact() {
        let half = diag_state(&[0.5, 0.5], 2, 1);
        let point = diag_state(&[1.0, 0.0], 2, 1);
        let down = majorizes(&half, &point).unwrap();
        assert!(!down.holds);
        assert!((down.margin + 0.5).abs() < 1e-12);
        let up = majorizes(&point, &half).unwrap();
        assert!(up.holds);
        assert!(up.margin.abs() < 1e-12);
    }

    #[test]
    fn sdp_oracle_handles_the_order_extremes() {
        let rho = sample_random((3, 1), SampleKind::Ginibre, 7);
        let reach_uniform = majorizes_via_sdp(&rho, &uniform(3)).unwrap();
        assert!(reach_uniform.holds);
        let Some(Witness::Channel(n)) = &reach_uniform.witness else {
            panic!("feasible verdict must carry a channel");
        };
        let out = apply(n, &rho).unwrap();
        assert!(out.matrix().sub(uniform(3).matrix()).max_abs() < 1e-4);
        let rep = check_properties(n);
        assert!(rep.cptp);
        assert!(rep.residuals.unital < 1e-4);

        let up = majorizes_via_sdp(&uniform(3), &pure(3)).unwrap();
        assert!(!up.holds);
        assert!(up.margin > tol::EPS_FEAS);
        assert!(up.witness.is_none());
    }

    #[test]
    fn sdp_oracle_agrees_with_partial_sums() {
        for seed in 0..10u64 {
            let rho = sample_random((3, 1), SampleKind::Ginibre, 300 + seed);
            let sigma = match seed % 3 {
                0 => mixed_unitary_push(&rho, 40 + seed),
                1 => sample_random((3, 1), SampleKind::Ginibre, 800 + seed),
                _ => sample_random((2, 1), SampleKind::Ginibre, 800 + seed),
            };
            let spectral = majorizes(&rho, &sigma).unwrap();
            let conic = majorizes_via_sdp(&rho, &sigma).unwrap();
            assert_eq!(spectral.holds, conic.holds, "seed {seed}");
        }
    }

    #[test]
    fn cross_dimension_witness_acts_on_padded_states() {
        let rho = diag_state(&[0.7, 0.3], 2, 1);
        let sigma = diag_state(&[0.5, 0.3, 0.2], 3, 1);
        let v = majorizes_via_sdp(&rho, &sigma).unwrap();
        assert!(v.holds);
        let Some(Witness::Channel(n)) = &v.witness else { panic!("witness expected") };
        assert_eq!(n.input_dims(), (3, 1));
        let padded = rho.embed(3, 1).unwrap();
        let out = apply(n, &padded).unwrap();
        assert!(out.matrix().sub(sigma.matrix()).max_abs() < 1e-4);
    }

    #[test]
    fn conditional_order_reaches_the_uniform_conditional() {
        let rho = sample_random((2, 2), SampleKind::Ginibre, 11);
        let sigma = uniform_conditional(&rho);
        for mode in [CondMode::LocallyBalanced, CondMode::ConditionallyUnital] {
            let v = cond_majorizes(&rho, &sigma, mode).unwrap();
            assert!(v.holds, "{mode:?}");
            let Some(Witness::Channel(n)) = &v.witness else { panic!("witness expected") };
            let out = apply(n, &rho).unwrap();
            assert!(out.matrix().sub(sigma.matrix()).max_abs() < 1e-4);
            let rep = check_properties(n);
            assert!(rep.cptp);
            assert!(rep.residuals.conditionally_unital < 1e-4);
            if mode == CondMode::LocallyBalanced {
                assert!(rep.residuals.semi_causal < 1e-4);
            }
        }
        // the analytic witness: randomize A, leave B untouched
        let randomize = make_standard(StandardKind::Randomizing { dim: 2 }).unwrap();
        let analytic = channels::tensor(&randomize, &ChoiChannel::identity(1, 2)).unwrap();
        assert!(check_properties(&analytic).locally_balanced);
        let pushed = apply(&analytic, &rho).unwrap();
        assert!(pushed.matrix().sub(sigma.matrix()).max_abs() < 1e-9);
    }

    #[test]
    fn correlated_classical_does_not_reach_entanglement() {
        let cc = diag_state(&[0.5, 0.0, 0.0, 0.5], 2, 2);
        let phi = maximally_entangled(2);
        for mode in [CondMode::LocallyBalanced, CondMode::ConditionallyUnital] {
            let v = cond_majorizes(&cc, &phi, mode).unwrap();
            assert!(!v.holds, "{mode:?}");
            assert!(v.margin > tol::EPS_FEAS);
            assert!(v.witness.is_none());
        }
    }

    #[test]
    fn conditional_order_is_reflexive() {
        let quantum = sample_random((2, 2), SampleKind::Ginibre, 21);
        let classical = classical_embed(&sample_joint(3, 3, 5));
        for rho in [quantum, classical] {
            for mode in [CondMode::LocallyBalanced, CondMode::ConditionallyUnital] {
                let v = cond_majorizes(&rho, &rho, mode).unwrap();
                assert!(v.holds, "{mode:?}");
                let Some(Witness::Channel(n)) = &v.witness else { panic!("witness expected") };
                let out = apply(n, &rho).unwrap();
                assert!(out.matrix().sub(rho.matrix()).max_abs() < 1e-4);
            }
        }
    }

    #[test]
    fn locally_balanced_feasibility_implies_the_relaxed_order() {
        for seed in 0..3u64 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, 31 + seed);
            let n = crate::channels::sample_b_controlled(2, 2, 2, 400 + seed);
            let sigma = apply(&n, &rho).unwrap();
            let lb = cond_majorizes(&rho, &sigma, CondMode::LocallyBalanced).unwrap();
            let cu = cond_majorizes(&rho, &sigma, CondMode::ConditionallyUnital).unwrap();
            assert!(lb.holds, "seed {seed}");
            assert!(cu.holds, "seed {seed}");
        }
    }

    #[test]
    fn conditional_order_chains_transitively() {
        for seed in 0..2u64 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, 41 + seed);
            let n1 = crate::channels::sample_b_controlled(2, 2, 2, 500 + seed);
            let n2 = crate::channels::sample_cds(2, 2, 2, 550 + seed);
            let sigma = apply(&n1, &rho).unwrap();
            let tau = apply(&n2, &sigma).unwrap();
            assert!(cond_majorizes(&rho, &sigma, CondMode::LocallyBalanced).unwrap().holds);
            assert!(cond_majorizes(&sigma, &tau, CondMode::LocallyBalanced).unwrap().holds);
            assert!(cond_majorizes(&rho, &tau, CondMode::LocallyBalanced).unwrap().holds);
        }
    }

    #[test]
    fn feasibility_never_lowers_conditional_entropies() {
        for seed in 0..3u64 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, 50 + seed);
            let n = crate::channels::sample_b_controlled(2, 2, 3, 600 + seed);
            let sigma = apply(&n, &rho).unwrap();
            assert!(cond_majorizes(&rho, &sigma, CondMode::LocallyBalanced).unwrap().holds);
            assert!(hmin(&sigma).value >= hmin(&rho).value - 1e-6);
            let before = conditional_entropy(DivergenceKind::Umegaki, &rho).unwrap().value;
            let after = conditional_entropy(DivergenceKind::Umegaki, &sigma).unwrap().value;
            assert!(after >= before - 1e-6, "seed {seed}: {after} < {before}");
        }
    }

    #[test]
    fn classical_reaches_uniform_conditionals_and_itself() {
        let p = sample_joint(3, 3, 61);
        let y_marginal: Vec<f64> = (0..3).map(|y| p.column(y).iter().sum()).collect();
        let mut probs = vec![0.0; 9];
        for x in 0..3 {
            for y in 0..3 {
                probs[x * 3 + y] = y_marginal[y] / 3.0;
            }
        }
        let uq = ClassicalJoint::new(3, 3, probs).unwrap();
        let v = classical_cond_majorizes(&p, &uq).unwrap();
        assert!(v.holds);
        let Some(Witness::Assignment(w)) = &v.witness else { panic!("assignment expected") };
        for y in 0..3 {
            let total: f64 = w.t[y].iter().sum();
            assert!((total - 1.0).abs() < 1e-5);
            for wi in 0..3 {
                let grid = &w.m[y][wi];
                for k in 0..3 {
                    let row: f64 = (0..3).map(|j| grid[k * 3 + j]).sum();
                    let col: f64 = (0..3).map(|j| grid[j * 3 + k]).sum();
                    assert!((row - w.t[y][wi]).abs() < 1e-5);
                    assert!((col - w.t[y][wi]).abs() < 1e-5);
                }
            }
        }
        for w_idx in 0..3 {
            for r in 0..3 {
                let got: f64 = (0..3)
                    .map(|y| (0..3).map(|c| w.m[y][w_idx][r * 3 + c] * p.prob(c, y)).sum::<f64>())
                    .sum();
                assert!((got - uq.prob(r, w_idx)).abs() < 1e-5);
            }
        }
        assert!(classical_cond_majorizes(&p, &p).unwrap().holds);
    }

    #[test]
    fn correlated_bits_are_unreachable_from_independent_ones() {
        let uu = ClassicalJoint::new(2, 2, vec![0.25; 4]).unwrap();
        let corr = ClassicalJoint::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let v = classical_cond_majorizes(&uu, &corr).unwrap();
        assert!(!v.holds);
        assert!(v.margin > tol::EPS_FEAS);
        // the reverse direction mixes correlations away and is reachable
        assert!(classical_cond_majorizes(&corr, &uu).unwrap().holds);
    }

    #[test]
    fn witnessed_classical_pairs_are_feasible() {
        for seed in 0..4u64 {
            let (p, q) = sample_feasible_classical_pair(3, 3, 3, 70 + seed);
            assert!(classical_cond_majorizes(&p, &q).unwrap().holds, "seed {seed}");
        }
    }

    #[test]
    fn zero_row_padding_matches_the_quantum_dimension_cases() {
        let p = sample_joint(2, 2, 81);
        let mut padded_probs = vec![0.0; 6];
        for x in 0..2 {
            for y in 0..2 {
                padded_probs[x * 2 + y] = p.prob(x, y);
            }
        }
        let padded = ClassicalJoint::new(3, 2, padded_probs).unwrap();
        assert!(classical_cond_majorizes(&p, &padded).unwrap().holds);
        assert!(classical_cond_majorizes(&padded, &p).unwrap().holds);
        // same pair through the quantum route: exercises both the
        // rotate-and-cut (|A'| > |A|) and the zero-pad (|A'| < |A|) cases
        let small = classical_embed(&p);
        let big = classical_embed(&padded);
        assert!(cond_majorizes(&small, &big, CondMode::LocallyBalanced).unwrap().holds);
        assert!(cond_majorizes(&big, &small, CondMode::LocallyBalanced).unwrap().holds);
    }

    #[test]
    fn classical_and_embedded_quantum_verdicts_agree() {
        for seed in 0..6u64 {
            let (p, q) = if seed % 2 == 0 {
                (sample_joint(3, 3, seed), sample_joint(3, 3, 1000 + seed))
            } else {
                sample_feasible_classical_pair(3, 3, 3, 2000 + seed)
            };
            let classical = classical_cond_majorizes(&p, &q).unwrap();
            let quantum = cond_majorizes(
                &classical_embed(&p),
                &classical_embed(&q),
                CondMode::LocallyBalanced,
            )
            .unwrap();
            assert_eq!(classical.holds, quantum.holds, "seed {seed}");
        }
    }

    #[test]
    fn trivial_conditioner_reduces_to_plain_majorization() {
        for seed in 0..4u64 {
            let rho = sample_random((3, 1), SampleKind::Ginibre, 90 + seed);
            let sigma = if seed % 2 == 0 {
                mixed_unitary_push(&rho, 95 + seed)
            } else {
                sample_random((3, 1), SampleKind::Ginibre, 190 + seed)
            };
            let plain = majorizes(&rho, &sigma).unwrap().holds;
            for mode in [CondMode::LocallyBalanced, CondMode::ConditionallyUnital] {
                let cond = cond_majorizes(&rho, &sigma, mode).unwrap();
                assert_eq!(cond.holds, plain, "seed {seed} {mode:?}");
            }
        }
    }

    #[test]
    fn oversized_full_rank_conditioner_is_obstructed() {
        let rho = sample_random((2, 2), SampleKind::Ginibre, 66);
        let sigma = sample_random((3, 2), SampleKind::Ginibre, 67);
        match cond_majorizes(&rho, &sigma, CondMode::LocallyBalanced) {
            Err(MajorizeError::RankObstruction { rank: 3, limit: 2 }) => {}
            other => panic!("expected a rank obstruction, got {other:?}"),
        }
        // a rank-2 marginal on the 3-dimensional side is rotated, cut,
        // and decided normally
        let n = crate::channels::sample_b_controlled(2, 2, 2, 68);
        let reachable = apply(&n, &rho).unwrap();
        let embedded = reachable.embed(3, 2).unwrap();
        let mut rng = Rng::new(69, STREAM_MAJORIZE);
        let u = random_unitary(3, &mut rng);
        let w = linalg::kron(&u, &ComplexMatrix::identity(2));
        let rotated =
            make_state(w.mul(embedded.matrix()).mul(&w.adjoint()), 3, 2).unwrap();
        let v = cond_majorizes(&rho, &rotated, CondMode::LocallyBalanced).unwrap();
        assert!(v.holds);
    }
}
