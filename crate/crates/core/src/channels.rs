//! Channels as Choi matrices: application, composition, the class
//! predicates behind conditional-entropy monotonicity, and the channel
//! constructions used in the min-entropy bounds.
//!
//! Index convention: the Choi matrix of `N : (inA, inB) -> (outA, outB)` is
//! `J = sum_{ij} |i><j|_in (x) N(|i><j|)` with composite row-major index
//! order `(inA, inB, outA, outB)` and the unnormalized scale `Tr[J] =
//! |inA|*|inB|`. Every marginal identity below is a `partial_trace` against
//! this one layout.
//!
//! Predicate cheat sheet, writing `J_S` for the marginal on subsystems `S`:
//! complete positivity is `J >= 0`; trace preservation is `Tr_out[J] =
//! I_in`; conditional unitality is `J_{B A~ B'} = J_{B B'} (x) u_{A~}`;
//! `A -/-> B'` semi-causality is `J_{A B B'} = u_A (x) J_{B B'}`; locally
//! balanced means both of the last two hold.

use num_complex::Complex64;
use thiserror::Error;

use crate::entropy;
use crate::linalg::{self, ComplexMatrix};
use crate::rng::Rng;
use crate::states::{self, make_state, BipartiteState, StateError, System};
use crate::tol;

const STREAM_CHANNELS: u64 = 0x4348414e;

/// Errors from channel construction and use.
#[derive(Debug, Error)]
pub enum ChannelError {
    /// Operand dimensions do not line up.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    /// The Kraus set does not sum to the identity on the input.
    #[error("Kraus set is not trace-preserving: residual {residual:.3e}")]
    NotTracePreserving { residual: f64 },
    /// A constructor precondition failed.
    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },
    /// The Choi matrix has a negative eigenvalue beyond tolerance.
    #[error("Choi matrix is not completely positive: min eigenvalue {min_eig:.3e}")]
    NotCompletelyPositive { min_eig: f64 },
    /// A proof-channel variant was requested for a state in the other
    /// min-entropy sign regime.
    #[error("{variant} construction requires min-entropy {requirement}, got {value:.6}")]
    WrongSignRegime { variant: &'static str, requirement: &'static str, value: f64 },
    /// The prepared residual operator came out indefinite, signalling an
    /// inconsistent min-entropy value upstream.
    #[error("prepared operator is not PSD: min eigenvalue {min_eig:.3e}")]
    NotPSD { min_eig: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

fn dim_err(context: impl Into<String>) -> ChannelError {
    ChannelError::DimensionMismatch { context: context.into() }
}

fn param_err(reason: impl Into<String>) -> ChannelError {
    ChannelError::InvalidParams { reason: reason.into() }
}

/// A completely positive trace-preserving map between bipartite systems,
/// stored as its Choi matrix. Validated on construction: PSD within
/// [`tol::EPS_PSD`] and trace-preserving within [`tol::EPS_TP`].
#[derive(Clone, Debug)]
pub struct ChoiChannel {
    choi: ComplexMatrix,
    in_a: usize,
    in_b: usize,
    out_a: usize,
    out_b: usize,
}

impl ChoiChannel {
    /// Validates and wraps a Choi matrix with the stated dimensions.
    pub fn new(
        choi: ComplexMatrix,
        dims: (usize, usize, usize, usize),
    ) -> Result<ChoiChannel, ChannelError> {
        let (in_a, in_b, out_a, out_b) = dims;
        if in_a == 0 || in_b == 0 || out_a == 0 || out_b == 0 {
            return Err(param_err("channel dimensions must be positive"));
        }
        let d_in = in_a * in_b;
        let d_out = out_a * out_b;
        if !choi.is_square() || choi.dim() != d_in * d_out {
            return Err(dim_err(format!(
                "Choi matrix is {}x{} but dims {:?} require {}",
                choi.rows(),
                choi.cols(),
                dims,
                d_in * d_out
            )));
        }
        if !choi.is_hermitian(tol::EPS_HERM) {
            return Err(param_err(format!(
                "Choi matrix is not Hermitian: residual {:.3e}",
                choi.herm_residual()
            )));
        }
        let choi = choi.hermitize();
        let spec = linalg::eig_hermitian(&choi).expect("hermitized above");
        let min_eig = spec.values.last().copied().unwrap_or(0.0);
        if min_eig < -tol::EPS_PSD {
            return Err(ChannelError::NotCompletelyPositive { min_eig });
        }
        let traced = linalg::partial_trace(&choi, &[d_in, d_out], &[0])
            .expect("dims checked above");
        let residual = traced.sub(&ComplexMatrix::identity(d_in)).max_abs();
        if residual > tol::EPS_TP {
            return Err(ChannelError::NotTracePreserving { residual });
        }
        Ok(ChoiChannel { choi, in_a, in_b, out_a, out_b })
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn input_dims(&self) -> (usize, usize) {
        (self.in_a, self.in_b)
    }

    pub fn output_dims(&self) -> (usize, usize) {
        (self.out_a, self.out_b)
    }

    /// The identity channel on an `(da, db)` system.
    pub fn identity(da: usize, db: usize) -> ChoiChannel {
        let eye = ComplexMatrix::identity(da * db);
        choi_from_kraus(&[eye], (da, db, da, db)).expect("identity Kraus is exact")
    }
}

/// Builds the Choi matrix of `rho -> sum_k K rho K^dag`.
pub fn choi_from_kraus(
    kraus: &[ComplexMatrix],
    dims: (usize, usize, usize, usize),
) -> Result<ChoiChannel, ChannelError> {
    let (in_a, in_b, out_a, out_b) = dims;
    let d_in = in_a * in_b;
    let d_out = out_a * out_b;
    if kraus.is_empty() {
        return Err(param_err("Kraus set is empty"));
    }
    for k in kraus {
        if k.rows() != d_out || k.cols() != d_in {
            return Err(dim_err(format!(
                "Kraus operator is {}x{} but dims {:?} require {}x{}",
                k.rows(),
                k.cols(),
                dims,
                d_out,
                d_in
            )));
        }
    }
    let mut gram = ComplexMatrix::zeros(d_in, d_in);
    for k in kraus {
        gram = gram.add(&k.adjoint().mul(k));
    }
    let residual = gram.sub(&ComplexMatrix::identity(d_in)).max_abs();
    if residual > tol::EPS_TP {
        return Err(ChannelError::NotTracePreserving { residual });
    }
    let j = ComplexMatrix::from_fn(d_in * d_out, d_in * d_out, |row, col| {
        let (i, r) = (row / d_out, row % d_out);
        let (jj, c) = (col / d_out, col % d_out);
        kraus.iter().map(|k| k[(r, i)] * k[(c, jj)].conj()).sum()
    });
    ChoiChannel::new(j, dims)
}

/// Builds a Choi matrix by running a linear map over the matrix units of
/// the input space. The closure must be complex-linear.
pub(crate) fn choi_from_map(
    f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    dims: (usize, usize, usize, usize),
) -> Result<ChoiChannel, ChannelError> {
    let (in_a, in_b, out_a, out_b) = dims;
    let d_in = in_a * in_b;
    let d_out = out_a * out_b;
    let mut j = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for jj in 0..d_in {
            let mut unit = ComplexMatrix::zeros(d_in, d_in);
            unit[(i, jj)] = Complex64::new(1.0, 0.0);
            let block = f(&unit);
            if block.rows() != d_out || block.cols() != d_out {
                return Err(dim_err(format!(
                    "map produced a {}x{} block; dims {:?} require {}x{}",
                    block.rows(),
                    block.cols(),
                    dims,
                    d_out,
                    d_out
                )));
            }
            for r in 0..d_out {
                for c in 0..d_out {
                    j[(i * d_out + r, jj * d_out + c)] = block[(r, c)];
                }
            }
        }
    }
    ChoiChannel::new(j, dims)
}

/// `Tr_in[J (X^T (x) I_out)]` on raw matrices; the trace against the
/// transpose reduces to pairing each Choi block with the matching entry.
fn apply_matrix(j: &ComplexMatrix, d_in: usize, d_out: usize, x: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(d_out, d_out, |r, c| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d_in {
            for k in 0..d_in {
                acc += j[(i * d_out + r, k * d_out + c)] * x[(i, k)];
            }
        }
        acc
    })
}

/// Applies the channel to a state. The output trace drifts by at most the
/// channel's TP residual, so it is renormalized before validation.
pub fn apply(n: &ChoiChannel, rho: &BipartiteState) -> Result<BipartiteState, ChannelError> {
    if (rho.dim_a(), rho.dim_b()) != (n.in_a, n.in_b) {
        return Err(dim_err(format!(
            "state has dims ({}, {}) but channel inputs are ({}, {})",
            rho.dim_a(),
            rho.dim_b(),
            n.in_a,
            n.in_b
        )));
    }
    let d_in = n.in_a * n.in_b;
    let d_out = n.out_a * n.out_b;
    let out = apply_matrix(&n.choi, d_in, d_out, rho.matrix());
    let tr = out.trace().re;
    let out = out.scale(1.0 / tr).hermitize();
    Ok(make_state(out, n.out_a, n.out_b)?)
}

/// Choi matrix of `second . first`.
pub fn compose(second: &ChoiChannel, first: &ChoiChannel) -> Result<ChoiChannel, ChannelError> {
    if first.output_dims() != second.input_dims() {
        return Err(dim_err(format!(
            "first outputs {:?} but second expects {:?}",
            first.output_dims(),
            second.input_dims()
        )));
    }
    let d_in = first.in_a * first.in_b;
    let d_mid = first.out_a * first.out_b;
    let d_out = second.out_a * second.out_b;
    let mut j = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for jj in 0..d_in {
            let mid = ComplexMatrix::from_fn(d_mid, d_mid, |r, c| {
                first.choi[(i * d_mid + r, jj * d_mid + c)]
            });
            let block = apply_matrix(&second.choi, d_mid, d_out, &mid);
            for r in 0..d_out {
                for c in 0..d_out {
                    j[(i * d_out + r, jj * d_out + c)] = block[(r, c)];
                }
            }
        }
    }
    ChoiChannel::new(j, (first.in_a, first.in_b, second.out_a, second.out_b))
}

/// Choi matrix of `n1 (x) n2`, acting on the combined `(A1 A2 | B1 B2)`
/// split.
pub fn tensor(n1: &ChoiChannel, n2: &ChoiChannel) -> Result<ChoiChannel, ChannelError> {
    let big = linalg::kron(&n1.choi, &n2.choi);
    let dims = [n1.in_a, n1.in_b, n1.out_a, n1.out_b, n2.in_a, n2.in_b, n2.out_a, n2.out_b];
    let perm = [0, 4, 1, 5, 2, 6, 3, 7];
    let j = linalg::permute_systems(&big, &dims, &perm).expect("dims are consistent");
    ChoiChannel::new(
        j,
        (n1.in_a * n2.in_a, n1.in_b * n2.in_b, n1.out_a * n2.out_a, n1.out_b * n2.out_b),
    )
}

/// Max-norm violations of each defining identity.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct PropertyResiduals {
    pub cp: f64,
    pub tp: f64,
    pub unital: f64,
    pub conditionally_unital: f64,
    pub semi_causal: f64,
}

/// Classification of a channel against the predicate hierarchy. Flags are
/// threshold decisions at [`tol::EPS_PROP`]; the raw residuals are exposed
/// for callers that want stricter cutoffs.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct ChannelPropertyReport {
    pub cptp: bool,
    pub unital: bool,
    pub conditionally_unital: bool,
    pub semi_causal: bool,
    pub locally_balanced: bool,
    pub residuals: PropertyResiduals,
}

pub fn check_properties(n: &ChoiChannel) -> ChannelPropertyReport {
    let d_in = n.in_a * n.in_b;
    let d_out = n.out_a * n.out_b;
    let dims = [n.in_a, n.in_b, n.out_a, n.out_b];

    let spec = linalg::eig_hermitian(&n.choi).expect("choi hermitized at construction");
    let cp = (-spec.values.last().copied().unwrap_or(0.0)).max(0.0);
    let tp = linalg::partial_trace(&n.choi, &[d_in, d_out], &[0])
        .expect("split is exact")
        .sub(&ComplexMatrix::identity(d_in))
        .max_abs();
    let unital = linalg::partial_trace(&n.choi, &[d_in, d_out], &[1])
        .expect("split is exact")
        .sub(&ComplexMatrix::identity(d_out))
        .max_abs();

    let j_bb = linalg::partial_trace(&n.choi, &dims, &[1, 3]).expect("marginal dims");
    let u_out_a = ComplexMatrix::identity(n.out_a).scale(1.0 / n.out_a as f64);
    let cu_target = linalg::permute_systems(
        &linalg::kron(&j_bb, &u_out_a),
        &[n.in_b, n.out_b, n.out_a],
        &[0, 2, 1],
    )
    .expect("marginal dims");
    let conditionally_unital = linalg::partial_trace(&n.choi, &dims, &[1, 2, 3])
        .expect("marginal dims")
        .sub(&cu_target)
        .max_abs();

    let u_in_a = ComplexMatrix::identity(n.in_a).scale(1.0 / n.in_a as f64);
    let semi_causal = linalg::partial_trace(&n.choi, &dims, &[0, 1, 3])
        .expect("marginal dims")
        .sub(&linalg::kron(&u_in_a, &j_bb))
        .max_abs();

    let residuals = PropertyResiduals { cp, tp, unital, conditionally_unital, semi_causal };
    let cu_flag = conditionally_unital <= tol::EPS_PROP;
    let sc_flag = semi_causal <= tol::EPS_PROP;
    ChannelPropertyReport {
        cptp: cp <= tol::EPS_PROP && tp <= tol::EPS_PROP,
        unital: unital <= tol::EPS_PROP,
        conditionally_unital: cu_flag,
        semi_causal: sc_flag,
        locally_balanced: cu_flag && sc_flag,
        residuals,
    }
}

/// The `d^2` pure-state spanning set of the density operators: basis
/// projectors plus the symmetric and skew superpositions of each pair.
pub(crate) fn spanning_states(d: usize) -> Vec<ComplexMatrix> {
    let mut set = Vec::with_capacity(d * d);
    let proj = |v: &[Complex64]| {
        ComplexMatrix::from_fn(d, d, |r, c| v[r] * v[c].conj())
    };
    for i in 0..d {
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[i] = Complex64::new(1.0, 0.0);
        set.push(proj(&v));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut v = vec![Complex64::new(0.0, 0.0); d];
            v[i] = Complex64::new(s, 0.0);
            v[j] = Complex64::new(s, 0.0);
            set.push(proj(&v));
            v[j] = Complex64::new(0.0, s);
            set.push(proj(&v));
        }
    }
    set
}

/// Worst-case violation of `N(u_A (x) rho_B) = u_A~ (x) Tr_A~[N(u_A (x)
/// rho_B)]` over the spanning set on `B`; the functional counterpart of the
/// Choi-marginal conditional-unitality test.
pub(crate) fn conditional_unitality_functional_residual(n: &ChoiChannel) -> f64 {
    let u_a = ComplexMatrix::identity(n.in_a).scale(1.0 / n.in_a as f64);
    let u_out = ComplexMatrix::identity(n.out_a).scale(1.0 / n.out_a as f64);
    let mut worst = 0.0f64;
    for rho_b in spanning_states(n.in_b) {
        let input = make_state(linalg::kron(&u_a, &rho_b), n.in_a, n.in_b)
            .expect("uniform product of a pure state");
        let out = apply(n, &input).expect("dims match by construction");
        let out_b = linalg::partial_trace(out.matrix(), &[n.out_a, n.out_b], &[1])
            .expect("output dims");
        let residual = out.matrix().sub(&linalg::kron(&u_out, &out_b)).max_abs();
        worst = worst.max(residual);
    }
    worst
}

/// Stock channel families.
pub enum StandardKind {
    /// Replaces the input with the uniform state of the given dimension.
    Randomizing { dim: usize },
    /// Replaces the input (of the given dims) with a fixed state.
    Replacement { input: (usize, usize), state: BipartiteState },
    /// Conjugation by an isometry between the given splits.
    Isometric { v: ComplexMatrix, input: (usize, usize), output: (usize, usize) },
    /// `sum_x (U_x (x) K_x) rho (...)^dag`: unitaries on `A` selected by an
    /// instrument on `B`. Certified locally balanced.
    BControlledMixedUnitary { unitaries: Vec<ComplexMatrix>, kraus: Vec<ComplexMatrix> },
    /// Conditionally doubly stochastic: `sum_j D_j (x) F_j` with each `D_j`
    /// doubly stochastic on a classical `X` and `{F_j}` a quantum
    /// instrument on `B`.
    Cds { x_dim: usize, stochastic: Vec<Vec<f64>>, instrument: Vec<Vec<ComplexMatrix>> },
    /// `E_{RA->A} . F_{B->RB'}` with `F` isometric: the generic semi-causal
    /// form. `e_kraus` maps `R (x) A`, with `R` leading, to the new `A`.
    SemiCausalFactored {
        e_kraus: Vec<ComplexMatrix>,
        r_dim: usize,
        a_in: usize,
        a_out: usize,
        isometry: ComplexMatrix,
        b_in: usize,
        b_out: usize,
    },
}

pub fn make_standard(kind: StandardKind) -> Result<ChoiChannel, ChannelError> {
    match kind {
        StandardKind::Randomizing { dim } => make_standard(StandardKind::Replacement {
            input: (dim, 1),
            state: states::uniform(dim),
        }),
        StandardKind::Replacement { input, state } => {
            let d_in = input.0 * input.1;
            if d_in == 0 {
                return Err(param_err("replacement input dims must be positive"));
            }
            let j = linalg::kron(&ComplexMatrix::identity(d_in), state.matrix());
            ChoiChannel::new(j, (input.0, input.1, state.dim_a(), state.dim_b()))
        }
        StandardKind::Isometric { v, input, output } => {
            let d_in = input.0 * input.1;
            let d_out = output.0 * output.1;
            if v.rows() != d_out || v.cols() != d_in {
                return Err(dim_err(format!(
                    "isometry is {}x{} but dims require {}x{}",
                    v.rows(),
                    v.cols(),
                    d_out,
                    d_in
                )));
            }
            let residual = v.adjoint().mul(&v).sub(&ComplexMatrix::identity(d_in)).max_abs();
            if residual > tol::EPS_TP {
                return Err(param_err(format!(
                    "operator is not an isometry: V^dag V deviates from I by {residual:.3e}"
                )));
            }
            choi_from_kraus(&[v], (input.0, input.1, output.0, output.1))
        }
        StandardKind::BControlledMixedUnitary { unitaries, kraus } => {
            if unitaries.is_empty() || unitaries.len() != kraus.len() {
                return Err(param_err("need matching nonempty unitary and Kraus lists"));
            }
            let da = unitaries[0].rows();
            for u in &unitaries {
                if u.rows() != da || u.cols() != da {
                    return Err(dim_err("unitaries must share one square dimension"));
                }
                let residual = u.adjoint().mul(u).sub(&ComplexMatrix::identity(da)).max_abs();
                if residual > tol::EPS_TP {
                    return Err(param_err(format!(
                        "control unitary is not unitary: residual {residual:.3e}"
                    )));
                }
            }
            let db_out = kraus[0].rows();
            let db_in = kraus[0].cols();
            let mut gram = ComplexMatrix::zeros(db_in, db_in);
            for k in &kraus {
                if k.rows() != db_out || k.cols() != db_in {
                    return Err(dim_err("Kraus operators must share one shape"));
                }
                gram = gram.add(&k.adjoint().mul(k));
            }
            let residual = gram.sub(&ComplexMatrix::identity(db_in)).max_abs();
            if residual > tol::EPS_TP {
                return Err(ChannelError::NotTracePreserving { residual });
            }
            let joint: Vec<ComplexMatrix> = unitaries
                .iter()
                .zip(&kraus)
                .map(|(u, k)| linalg::kron(u, k))
                .collect();
            let channel = choi_from_kraus(&joint, (da, db_in, da, db_out))?;
            debug_assert!(check_properties(&channel).locally_balanced);
            Ok(channel)
        }
        StandardKind::Cds { x_dim, stochastic, instrument } => {
            if stochastic.is_empty() || stochastic.len() != instrument.len() {
                return Err(param_err("need matching nonempty stochastic and instrument lists"));
            }
            for d in &stochastic {
                if d.len() != x_dim * x_dim {
                    return Err(dim_err(format!(
                        "stochastic block has {} entries, expected {}",
                        d.len(),
                        x_dim * x_dim
                    )));
                }
                for (pos, &v) in d.iter().enumerate() {
                    if v < -tol::EPS_PROP {
                        return Err(param_err(format!(
                            "stochastic entry {pos} is negative ({v:.3e})"
                        )));
                    }
                }
                for i in 0..x_dim {
                    let row: f64 = (0..x_dim).map(|c| d[i * x_dim + c]).sum();
                    let col: f64 = (0..x_dim).map(|r| d[r * x_dim + i]).sum();
                    if (row - 1.0).abs() > tol::EPS_PROP || (col - 1.0).abs() > tol::EPS_PROP {
                        return Err(param_err(format!(
                            "block is not doubly stochastic: row sum {row:.9}, column sum {col:.9}"
                        )));
                    }
                }
            }
            let first = instrument
                .iter()
                .flatten()
                .next()
                .ok_or_else(|| param_err("instrument has no Kraus operators"))?;
            let db_out = first.rows();
            let db_in = first.cols();
            let mut gram = ComplexMatrix::zeros(db_in, db_in);
            for k in instrument.iter().flatten() {
                if k.rows() != db_out || k.cols() != db_in {
                    return Err(dim_err("instrument Kraus operators must share one shape"));
                }
                gram = gram.add(&k.adjoint().mul(k));
            }
            let residual = gram.sub(&ComplexMatrix::identity(db_in)).max_abs();
            if residual > tol::EPS_TP {
                return Err(ChannelError::NotTracePreserving { residual });
            }
            // lift each stochastic block as a mixture of permutation
            // unitaries so classical identities stay quantum identities
            let lifted: Vec<Vec<(f64, Vec<usize>)>> = stochastic
                .iter()
                .map(|d| birkhoff(d, x_dim))
                .collect::<Result<_, _>>()?;
            let f = |omega: &ComplexMatrix| {
                let mut out = ComplexMatrix::zeros(x_dim * db_out, x_dim * db_out);
                for (parts, fs) in lifted.iter().zip(&instrument) {
                    for x in 0..x_dim {
                        for xp in 0..x_dim {
                            let block = ComplexMatrix::from_fn(db_in, db_in, |r, c| {
                                omega[(x * db_in + r, xp * db_in + c)]
                            });
                            let mut pushed = ComplexMatrix::zeros(db_out, db_out);
                            for k in fs {
                                pushed = pushed.add(&k.mul(&block).mul(&k.adjoint()));
                            }
                            for (w, perm) in parts {
                                let (y, yp) = (perm[x], perm[xp]);
                                for r in 0..db_out {
                                    for c in 0..db_out {
                                        out[(y * db_out + r, yp * db_out + c)] +=
                                            pushed[(r, c)] * *w;
                                    }
                                }
                            }
                        }
                    }
                }
                out
            };
            let channel = choi_from_map(f, (x_dim, db_in, x_dim, db_out))?;
            debug_assert!(check_properties(&channel).locally_balanced);
            Ok(channel)
        }
        StandardKind::SemiCausalFactored {
            e_kraus,
            r_dim,
            a_in,
            a_out,
            isometry,
            b_in,
            b_out,
        } => {
            if e_kraus.is_empty() {
                return Err(param_err("local channel has no Kraus operators"));
            }
            let ra = r_dim * a_in;
            let mut gram = ComplexMatrix::zeros(ra, ra);
            for l in &e_kraus {
                if l.rows() != a_out || l.cols() != ra {
                    return Err(dim_err(format!(
                        "local Kraus operator is {}x{}, expected {}x{}",
                        l.rows(),
                        l.cols(),
                        a_out,
                        ra
                    )));
                }
                gram = gram.add(&l.adjoint().mul(l));
            }
            let residual = gram.sub(&ComplexMatrix::identity(ra)).max_abs();
            if residual > tol::EPS_TP {
                return Err(ChannelError::NotTracePreserving { residual });
            }
            let rb = r_dim * b_out;
            if isometry.rows() != rb || isometry.cols() != b_in {
                return Err(dim_err(format!(
                    "isometry is {}x{}, expected {}x{}",
                    isometry.rows(),
                    isometry.cols(),
                    rb,
                    b_in
                )));
            }
            let iso_res =
                isometry.adjoint().mul(&isometry).sub(&ComplexMatrix::identity(b_in)).max_abs();
            if iso_res > tol::EPS_TP {
                return Err(param_err(format!(
                    "operator is not an isometry: V^dag V deviates from I by {iso_res:.3e}"
                )));
            }
            // K_l[(a~, b'), (a, b)] = sum_r L_l[a~, (r, a)] V[(r, b'), b]
            let kraus: Vec<ComplexMatrix> = e_kraus
                .iter()
                .map(|l| {
                    ComplexMatrix::from_fn(a_out * b_out, a_in * b_in, |row, col| {
                        let (at, bp) = (row / b_out, row % b_out);
                        let (a, b) = (col / b_in, col % b_in);
                        (0..r_dim)
                            .map(|r| l[(at, r * a_in + a)] * isometry[(r * b_out + bp, b)])
                            .sum()
                    })
                })
                .collect();
            let channel = choi_from_kraus(&kraus, (a_in, b_in, a_out, b_out))?;
            debug_assert!(check_properties(&channel).semi_causal);
            Ok(channel)
        }
    }
}

/// Channel constructions that witness the min-entropy bounds.
#[derive(Clone, Copy, Debug)]
pub enum ProofVariant {
    /// Measure-and-prepare witness for states with min-entropy `>= 0`:
    /// maps the uniform state on an `m`-dimensional subspace of the
    /// classical input back to the state itself.
    NonNegative,
    /// Witness for states with min-entropy `< 0`: maps the first basis
    /// state of the classical input to the state padded with a uniform
    /// ancilla.
    Negative,
    /// Witness that the maximally entangled state of local dimension `k`
    /// pins conditional entropy at `-log2 k`. Determined by `k` alone; the
    /// state arguments are not consulted.
    MaxEntangled { k: usize },
}

/// Builds the witness channel for the requested regime. `sigma_b` defaults
/// to the state's `B` marginal (giving a locally balanced channel); passing
/// the optimizer from the free-conditioning min-entropy instead yields the
/// conditionally unital variant for that quantity.
pub fn make_proof_channel(
    variant: ProofVariant,
    rho: &BipartiteState,
    sigma_b: Option<&BipartiteState>,
) -> Result<ChoiChannel, ChannelError> {
    match variant {
        ProofVariant::MaxEntangled { k } => maxent_channel(k),
        ProofVariant::NonNegative => sign_witness(rho, sigma_b, true),
        ProofVariant::Negative => sign_witness(rho, sigma_b, false),
    }
}

fn resolve_sigma(
    rho: &BipartiteState,
    sigma_b: Option<&BipartiteState>,
) -> Result<ComplexMatrix, ChannelError> {
    match sigma_b {
        None => Ok(rho.marginal(System::B).matrix().clone()),
        Some(s) => {
            if s.dim() != rho.dim_b() {
                return Err(dim_err(format!(
                    "conditioning state has dimension {}, expected {}",
                    s.dim(),
                    rho.dim_b()
                )));
            }
            Ok(s.matrix().clone())
        }
    }
}

fn sign_witness(
    rho: &BipartiteState,
    sigma_b: Option<&BipartiteState>,
    nonneg: bool,
) -> Result<ChoiChannel, ChannelError> {
    let sigma = resolve_sigma(rho, sigma_b)?;
    let (lam, leak) = entropy::sandwich_against(rho, &sigma);
    if leak > tol::EPS_SUPP || lam <= 0.0 {
        return Err(param_err(
            "conditioning state does not cover the input support".to_string(),
        ));
    }
    let h = -lam.log2();
    let db = rho.dim_b();
    // exact zeros compute as +-1e-16; the guard pins them to the
    // non-negative regime
    const SIGN_GUARD: f64 = 1e-9;
    if nonneg {
        if h < -SIGN_GUARD {
            return Err(ChannelError::WrongSignRegime {
                variant: "non-negative",
                requirement: ">= 0",
                value: h,
            });
        }
        // floor with a guard band so integer min-entropies do not flicker
        let m = (2f64.powf(h) + 1e-12).floor().max(1.0) as usize;
        let mut work = rho.clone();
        let mut k = rho.dim_a();
        if m >= k {
            work = rho.embed(m + 1, db)?;
            k = m + 1;
        }
        let tau_m = linalg::kron(&ComplexMatrix::identity(k), &sigma)
            .sub(&work.matrix().scale(m as f64))
            .scale(1.0 / (k - m) as f64);
        let tau = prepared_state(tau_m, k, db)?;
        let proj = ComplexMatrix::from_diag(
            &(0..k).map(|x| if x < m { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
        );
        let co_proj = ComplexMatrix::identity(k).sub(&proj);
        let j = linalg::kron(&proj, work.matrix()).add(&linalg::kron(&co_proj, tau.matrix()));
        ChoiChannel::new(j, (k, 1, k, db))
    } else {
        if h >= -SIGN_GUARD {
            return Err(ChannelError::WrongSignRegime {
                variant: "negative",
                requirement: "< 0",
                value: h,
            });
        }
        let k = rho.dim_a();
        // ceiling with a guard band so integer thresholds do not flicker
        let kp = ((lam - 1e-12).ceil().max(1.0)) as usize;
        let x_dim = k * kp;
        let tau_m = linalg::kron(&ComplexMatrix::identity(k), &sigma)
            .scale(kp as f64)
            .sub(rho.matrix())
            .scale(1.0 / (x_dim - 1) as f64);
        let tau = prepared_state(tau_m, k, db)?;
        let out_rho = pad_with_uniform(rho.matrix(), k, db, kp);
        let out_tau = pad_with_uniform(tau.matrix(), k, db, kp);
        let mut e00 = ComplexMatrix::zeros(x_dim, x_dim);
        e00[(0, 0)] = Complex64::new(1.0, 0.0);
        let rest = ComplexMatrix::identity(x_dim).sub(&e00);
        let j = linalg::kron(&e00, &out_rho).add(&linalg::kron(&rest, &out_tau));
        ChoiChannel::new(j, (x_dim, 1, x_dim, db))
    }
}

/// Validates a prepared operator as a state, mapping indefiniteness to the
/// dedicated error.
fn prepared_state(m: ComplexMatrix, da: usize, db: usize) -> Result<BipartiteState, ChannelError> {
    let spec = linalg::eig_hermitian(&m.hermitize()).expect("hermitized");
    let min_eig = spec.values.last().copied().unwrap_or(0.0);
    if min_eig < -tol::EPS_PSD {
        return Err(ChannelError::NotPSD { min_eig });
    }
    Ok(make_state(m, da, db)?)
}

/// `(state on (A,B)) (x) u_{A'}` arranged on the `((A, A'), B)` split.
fn pad_with_uniform(m: &ComplexMatrix, da: usize, db: usize, extra: usize) -> ComplexMatrix {
    let u = ComplexMatrix::identity(extra).scale(1.0 / extra as f64);
    linalg::permute_systems(&linalg::kron(m, &u), &[da, db, extra], &[0, 2, 1])
        .expect("dims are consistent")
}

/// Birkhoff decomposition of a doubly stochastic matrix (row-major, entry
/// `d[y * n + x]` is the weight sent from column `x` to row `y`): greedily
/// peels off permutations until the residual mass is negligible, then
/// rescales the weights to sum to one.
fn birkhoff(d: &[f64], n: usize) -> Result<Vec<(f64, Vec<usize>)>, ChannelError> {
    let mut rest = d.to_vec();
    let mut parts: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut remaining = 1.0f64;
    while remaining > 1e-10 {
        // entries above remaining / 4n^2 still satisfy Hall's condition
        let thr = remaining / (4.0 * (n * n) as f64);
        let Some(perm) = perfect_matching(&rest, n, thr) else {
            if remaining <= (n as f64) * tol::EPS_PROP {
                break;
            }
            return Err(param_err(
                "stochastic block has no permutation support left; not doubly stochastic",
            ));
        };
        let w = perm
            .iter()
            .enumerate()
            .map(|(x, &y)| rest[y * n + x])
            .fold(f64::INFINITY, f64::min);
        for (x, &y) in perm.iter().enumerate() {
            rest[y * n + x] -= w;
        }
        remaining -= w;
        parts.push((w, perm));
    }
    let total: f64 = parts.iter().map(|(w, _)| *w).sum();
    if total <= 0.0 {
        return Err(param_err("stochastic block carries no mass"));
    }
    for (w, _) in &mut parts {
        *w /= total;
    }
    Ok(parts)
}

/// Kuhn's augmenting-path matching over entries strictly above `thr`;
/// returns `perm` with `perm[x] = y` when column `x` is matched to row `y`.
fn perfect_matching(rest: &[f64], n: usize, thr: f64) -> Option<Vec<usize>> {
    fn augment(
        x: usize,
        rest: &[f64],
        n: usize,
        thr: f64,
        visited: &mut [bool],
        row_col: &mut [usize],
    ) -> bool {
        for y in 0..n {
            if rest[y * n + x] > thr && !visited[y] {
                visited[y] = true;
                if row_col[y] == usize::MAX
                    || augment(row_col[y], rest, n, thr, visited, row_col)
                {
                    row_col[y] = x;
                    return true;
                }
            }
        }
        false
    }
    let mut row_col = vec![usize::MAX; n];
    for x in 0..n {
        let mut visited = vec![false; n];
        if !augment(x, rest, n, thr, &mut visited, &mut row_col) {
            return None;
        }
    }
    let mut perm = vec![0usize; n];
    for (y, &x) in row_col.iter().enumerate() {
        perm[x] = y;
    }
    Some(perm)
}

fn maxent_channel(k: usize) -> Result<ChoiChannel, ChannelError> {
    if k < 2 {
        return Err(param_err("maximally entangled witness needs local dimension >= 2"));
    }
    let phi = states::maximally_entangled(k);
    let x_dim = k * k;
    let mut e00 = ComplexMatrix::zeros(x_dim, x_dim);
    e00[(0, 0)] = Complex64::new(1.0, 0.0);
    let rest = ComplexMatrix::identity(x_dim).sub(&e00).scale(1.0 / (x_dim - 1) as f64);
    let f = move |omega: &ComplexMatrix| {
        let ab = linalg::partial_trace(omega, &[k, k, k], &[0, 2]).expect("basis dims");
        let overlap = phi.matrix().mul(&ab).trace();
        let remainder = ab.trace() - overlap;
        e00.scale_c(overlap).add(&rest.scale_c(remainder))
    };
    choi_from_map(f, (x_dim, k, x_dim, 1))
}

/// Deterministic CPTP sampler: Stinespring dilation with a random isometry
/// into an environment of dimension `env`.
pub(crate) fn sample_channel(
    dims: (usize, usize, usize, usize),
    env: usize,
    seed: u64,
) -> ChoiChannel {
    let (ia, ib, oa, ob) = dims;
    let d_in = ia * ib;
    let d_out = oa * ob;
    let mut rng = Rng::new(seed, STREAM_CHANNELS);
    let v = states::random_isometry(d_out * env, d_in, &mut rng);
    let kraus: Vec<ComplexMatrix> = (0..env)
        .map(|e| ComplexMatrix::from_fn(d_out, d_in, |r, c| v[(r * env + e, c)]))
        .collect();
    choi_from_kraus(&kraus, dims).expect("sliced isometry is trace-preserving")
}

/// Random certified locally balanced channel: unitaries on `A` controlled
/// by an instrument on `B`.
pub(crate) fn sample_b_controlled(da: usize, db: usize, terms: usize, seed: u64) -> ChoiChannel {
    let mut rng = Rng::new(seed, STREAM_CHANNELS ^ 0xb1);
    let unitaries: Vec<ComplexMatrix> =
        (0..terms).map(|_| states::random_unitary(da, &mut rng)).collect();
    let v = states::random_isometry(db * terms, db, &mut rng);
    let kraus: Vec<ComplexMatrix> = (0..terms)
        .map(|x| ComplexMatrix::from_fn(db, db, |r, c| v[(r * terms + x, c)]))
        .collect();
    make_standard(StandardKind::BControlledMixedUnitary { unitaries, kraus })
        .expect("sampled parameters meet the preconditions")
}

/// Random conditionally doubly stochastic channel: Birkhoff mixtures on the
/// classical side and a sliced-isometry instrument on `B`.
pub(crate) fn sample_cds(x_dim: usize, db: usize, terms: usize, seed: u64) -> ChoiChannel {
    let mut rng = Rng::new(seed, STREAM_CHANNELS ^ 0xcd5);
    // Birkhoff mixtures: Dirichlet-weighted sums of permutation matrices
    // are exactly doubly stochastic
    let stochastic: Vec<Vec<f64>> = (0..terms)
        .map(|_| {
            let weights = rng.dirichlet(x_dim);
            let mut d = vec![0.0f64; x_dim * x_dim];
            for &w in &weights {
                let perm = rng.permutation(x_dim);
                for (x, &y) in perm.iter().enumerate() {
                    d[y * x_dim + x] += w;
                }
            }
            d
        })
        .collect();
    let v = states::random_isometry(db * terms, db, &mut rng);
    let instrument: Vec<Vec<ComplexMatrix>> = (0..terms)
        .map(|j| {
            vec![ComplexMatrix::from_fn(db, db, |r, c| v[(r * terms + j, c)])]
        })
        .collect();
    make_standard(StandardKind::Cds { x_dim, stochastic, instrument })
        .expect("sampled parameters meet the preconditions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{conditional_entropy, hmin, hmin_up_with_optimizer, DivergenceKind};
    use crate::states::{sample_random, uniform, SampleKind};

    fn entangled_noise_mix(k: usize, weight: f64) -> BipartiteState {
        let phi = states::maximally_entangled(k);
        let d = (k * k) as f64;
        let m = phi
            .matrix()
            .scale(weight)
            .add(&ComplexMatrix::identity(k * k).scale((1.0 - weight) / d));
        make_state(m, k, k).unwrap()
    }

    #[test]
    fn identity_choi_matches_pairwise_form() {
        let id = ChoiChannel::identity(2, 1);
        for i in 0..2 {
            for r in 0..2 {
                for j in 0..2 {
                    for c in 0..2 {
                        let want = if i == r && j == c { 1.0 } else { 0.0 };
                        let got = id.choi()[(i * 2 + r, j * 2 + c)];
                        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn dephasing_choi_is_diagonal() {
        let e00 = ComplexMatrix::from_diag(&[1.0, 0.0]);
        let e11 = ComplexMatrix::from_diag(&[0.0, 1.0]);
        let n = choi_from_kraus(&[e00, e11], (2, 1, 2, 1)).unwrap();
        let want = ComplexMatrix::from_diag(&[1.0, 0.0, 0.0, 1.0]);
        assert!(n.choi().sub(&want).max_abs() < 1e-15);
    }

    #[test]
    fn non_trace_preserving_kraus_sets_are_rejected() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        let err = choi_from_kraus(&[half], (2, 1, 2, 1)).unwrap_err();
        assert!(matches!(err, ChannelError::NotTracePreserving { .. }));
    }

    #[test]
    fn random_isometry_channels_pass_cptp() {
        for seed in 0..5 {
            let n = sample_channel((2, 2, 2, 2), 3, seed);
            let report = check_properties(&n);
            assert!(report.cptp, "seed {seed}: residuals {:?}", report.residuals);
        }
    }

    #[test]
    fn apply_identity_preserves_states_and_randomizing_flattens_them() {
        let rho = sample_random((2, 2), SampleKind::Ginibre, 4);
        let id = ChoiChannel::identity(2, 2);
        let same = apply(&id, &rho).unwrap();
        assert!(same.matrix().sub(rho.matrix()).max_abs() < 1e-12);

        let rand = make_standard(StandardKind::Randomizing { dim: 2 }).unwrap();
        let qubit = sample_random((2, 1), SampleKind::Ginibre, 5);
        let out = apply(&rand, &qubit).unwrap();
        assert!(out.matrix().sub(uniform(2).matrix()).max_abs() < 1e-12);
    }

    #[test]
    fn choi_application_agrees_with_kraus_action() {
        let mut rng = Rng::new(77, STREAM_CHANNELS);
        let v = states::random_isometry(8, 4, &mut rng);
        let kraus: Vec<ComplexMatrix> =
            (0..2).map(|e| ComplexMatrix::from_fn(4, 4, |r, c| v[(r * 2 + e, c)])).collect();
        let n = choi_from_kraus(&kraus, (2, 2, 2, 2)).unwrap();
        for seed in 0..4 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, seed);
            let via_choi = apply(&n, &rho).unwrap();
            let mut direct = ComplexMatrix::zeros(4, 4);
            for k in &kraus {
                direct = direct.add(&k.mul(rho.matrix()).mul(&k.adjoint()));
            }
            assert!(via_choi.matrix().sub(&direct).max_abs() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn composition_matches_two_step_application() {
        let n1 = sample_channel((2, 2, 2, 2), 2, 31);
        let n2 = sample_channel((2, 2, 2, 2), 3, 32);
        let id = ChoiChannel::identity(2, 2);
        assert!(compose(&id, &n1).unwrap().choi().sub(n1.choi()).max_abs() < 1e-10);

        let chained = compose(&n2, &n1).unwrap();
        for seed in 0..4 {
            let rho = sample_random((2, 2), SampleKind::Ginibre, seed + 60);
            let two_step = apply(&n2, &apply(&n1, &rho).unwrap()).unwrap();
            let one_step = apply(&chained, &rho).unwrap();
            assert!(one_step.matrix().sub(two_step.matrix()).max_abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn tensored_randomizers_flatten_both_sides() {
        let rand_a = make_standard(StandardKind::Randomizing { dim: 2 }).unwrap();
        let rand_b = make_standard(StandardKind::Replacement {
            input: (1, 2),
            state: make_state(ComplexMatrix::identity(2).scale(0.5), 1, 2).unwrap(),
        })
        .unwrap();
        let both = tensor(&rand_a, &rand_b).unwrap();
        assert_eq!(both.input_dims(), (2, 2));
        let rho = sample_random((2, 2), SampleKind::Ginibre, 8);
        let out = apply(&both, &rho).unwrap();
        assert!(out.matrix().sub(&ComplexMatrix::identity(4).scale(0.25)).max_abs() < 1e-12);
    }

    #[test]
    fn identity_channel_satisfies_every_predicate() {
        let report = check_properties(&ChoiChannel::identity(2, 2));
        assert!(report.cptp);
        assert!(report.unital);
        assert!(report.conditionally_unital);
        assert!(report.semi_causal);
        assert!(report.locally_balanced);
    }

    #[test]
    fn swap_channel_signals_in_both_directions() {
        let swap = ComplexMatrix::from_fn(4, 4, |r, c| {
            let (a, b) = (r / 2, r % 2);
            if c == b * 2 + a { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let n = choi_from_kraus(&[swap], (2, 2, 2, 2)).unwrap();
        let report = check_properties(&n);
        assert!(report.cptp);
        assert!(!report.conditionally_unital);
        assert!(!report.semi_causal);
        assert!(!report.locally_balanced);
    }

    #[test]
    fn randomize_a_with_identity_b_is_locally_balanced() {
        let rand_a = make_standard(StandardKind::Randomizing { dim: 2 }).unwrap();
        let id_b = ChoiChannel::identity(1, 2);
        let n = tensor(&rand_a, &id_b).unwrap();
        let report = check_properties(&n);
        assert!(report.locally_balanced, "residuals {:?}", report.residuals);
    }

    #[test]
    fn bit_controlled_flip_is_locally_balanced() {
        let x_gate = ComplexMatrix::from_fn(2, 2, |r, c| {
            if r != c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        });
        let n = make_standard(StandardKind::BControlledMixedUnitary {
            unitaries: vec![ComplexMatrix::identity(2), x_gate],
            kraus: vec![
                ComplexMatrix::from_diag(&[1.0, 0.0]),
                ComplexMatrix::from_diag(&[0.0, 1.0]),
            ],
        })
        .unwrap();
        let report = check_properties(&n);
        assert!(report.locally_balanced, "residuals {:?}", report.residuals);
    }

    #[test]
    fn sampled_controlled_mixers_are_locally_balanced() {
        for seed in 0..5 {
            let n = sample_b_controlled(2, 2, 3, seed);
            let report = check_properties(&n);
            assert!(report.locally_balanced, "seed {seed}: {:?}", report.residuals);
        }
    }

    #[test]
    fn doubly_stochastic_mixtures_are_locally_balanced() {
        let id = make_standard(StandardKind::Cds {
            x_dim: 2,
            stochastic: vec![vec![1.0, 0.0, 0.0, 1.0]],
            instrument: vec![vec![ComplexMatrix::identity(2)]],
        })
        .unwrap();
        assert!(id.choi().sub(ChoiChannel::identity(2, 2).choi()).max_abs() < 1e-12);

        for seed in 0..5 {
            let n = sample_cds(3, 2, 3, seed);
            let report = check_properties(&n);
            assert!(report.locally_balanced, "seed {seed}: {:?}", report.residuals);
        }
    }

    #[test]
    fn factored_channels_are_semi_causal() {
        for seed in 0..5 {
            let mut rng = Rng::new(seed, STREAM_CHANNELS ^ 0xf);
            let r_dim = 2;
            // E: R (x) A -> A as a sliced random isometry; F: B -> R (x) B'
            let ve = states::random_isometry(2 * 2, r_dim * 2, &mut rng);
            let e_kraus: Vec<ComplexMatrix> = (0..2)
                .map(|e| {
                    ComplexMatrix::from_fn(2, r_dim * 2, |r, c| ve[(r * 2 + e, c)])
                })
                .collect();
            let isometry = states::random_isometry(r_dim * 2, 2, &mut rng);
            let n = make_standard(StandardKind::SemiCausalFactored {
                e_kraus,
                r_dim,
                a_in: 2,
                a_out: 2,
                isometry,
                b_in: 2,
                b_out: 2,
            })
            .unwrap();
            let report = check_properties(&n);
            assert!(report.cptp, "seed {seed}");
            assert!(report.semi_causal, "seed {seed}: {:?}", report.residuals);
        }
    }

    #[test]
    fn marginal_and_functional_unitality_tests_agree() {
        let mut channels: Vec<ChoiChannel> = (0..6)
            .map(|seed| sample_channel((2, 2, 2, 2), 3, 200 + seed))
            .collect();
        channels.push(sample_b_controlled(2, 2, 2, 7));
        channels.push(ChoiChannel::identity(2, 2));
        for (idx, n) in channels.iter().enumerate() {
            let report = check_properties(n);
            let functional = conditional_unitality_functional_residual(n);
            assert_eq!(
                report.conditionally_unital,
                functional <= tol::EPS_PROP,
                "channel {idx}: marginal {:.3e} vs functional {functional:.3e}",
                report.residuals.conditionally_unital
            );
        }
    }

    #[test]
    fn nonneg_witness_reproduces_the_correlated_state() {
        let joint = crate::majorize::ClassicalJoint::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let cc = states::classical_embed(&joint);
        let n = make_proof_channel(ProofVariant::NonNegative, &cc, None).unwrap();
        assert_eq!(n.input_dims(), (2, 1));

        // min-entropy 0 gives m = 1: the favored input is the first basis state
        let input = make_state(ComplexMatrix::from_diag(&[1.0, 0.0]), 2, 1).unwrap();
        let out = apply(&n, &input).unwrap();
        assert!(out.matrix().sub(cc.matrix()).max_abs() < 1e-10);

        let report = check_properties(&n);
        assert!(report.conditionally_unital, "{:?}", report.residuals);
        assert!(report.semi_causal, "{:?}", report.residuals);
    }

    #[test]
    fn nonneg_witness_widens_a_when_min_entropy_saturates_the_dimension() {
        let rho_b = sample_random((2, 1), SampleKind::Ginibre, 13);
        let prod = make_state(
            linalg::kron(&ComplexMatrix::identity(2).scale(0.5), rho_b.matrix()),
            2,
            2,
        )
        .unwrap();
        let n = make_proof_channel(ProofVariant::NonNegative, &prod, None).unwrap();
        // min-entropy is 1, so m = 2 forces the A system up to dimension 3
        assert_eq!(n.input_dims(), (3, 1));
        assert_eq!(n.output_dims(), (3, 2));

        let input = make_state(ComplexMatrix::from_diag(&[0.5, 0.5, 0.0]), 3, 1).unwrap();
        let out = apply(&n, &input).unwrap();
        let want = prod.embed(3, 2).unwrap();
        assert!(out.matrix().sub(want.matrix()).max_abs() < 1e-10);
        assert!(check_properties(&n).locally_balanced);
    }

    #[test]
    fn negative_witness_maps_the_flag_state_to_the_padded_state() {
        let phi = states::maximally_entangled(2);
        let n = make_proof_channel(ProofVariant::Negative, &phi, None).unwrap();
        // t = 2 and k = 2, so the classical input has dimension 4
        assert_eq!(n.input_dims(), (4, 1));
        assert_eq!(n.output_dims(), (4, 2));

        let mut flag = ComplexMatrix::zeros(4, 4);
        flag[(0, 0)] = Complex64::new(1.0, 0.0);
        let input = make_state(flag, 4, 1).unwrap();
        let out = apply(&n, &input).unwrap();
        let want = pad_with_uniform(phi.matrix(), 2, 2, 2);
        assert!(out.matrix().sub(&want).max_abs() < 1e-10);

        let report = check_properties(&n);
        assert!(report.conditionally_unital, "{:?}", report.residuals);
        assert!(report.semi_causal, "{:?}", report.residuals);
    }

    #[test]
    fn witness_variants_reject_the_wrong_sign_regime() {
        let phi = states::maximally_entangled(2);
        let err = make_proof_channel(ProofVariant::NonNegative, &phi, None).unwrap_err();
        assert!(matches!(err, ChannelError::WrongSignRegime { .. }));

        let joint = crate::majorize::ClassicalJoint::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let cc = states::classical_embed(&joint);
        let err = make_proof_channel(ProofVariant::Negative, &cc, None).unwrap_err();
        assert!(matches!(err, ChannelError::WrongSignRegime { .. }));
    }

    #[test]
    fn witnesses_with_free_conditioning_stay_conditionally_unital() {
        for (seed, nonneg) in [(3u64, true), (4, false)] {
            let rho = if nonneg {
                sample_random((2, 2), SampleKind::Separable { terms: 3 }, seed)
            } else {
                entangled_noise_mix(2, 0.9)
            };
            let (_, sigma) = hmin_up_with_optimizer(&rho).unwrap();
            let sigma = make_state(sigma, 2, 1).unwrap();
            let variant =
                if nonneg { ProofVariant::NonNegative } else { ProofVariant::Negative };
            let n = make_proof_channel(variant, &rho, Some(&sigma)).unwrap();
            let report = check_properties(&n);
            assert!(report.cptp, "seed {seed}: {:?}", report.residuals);
            assert!(report.conditionally_unital, "seed {seed}: {:?}", report.residuals);
        }
    }

    #[test]
    fn maxent_witness_defining_identities() {
        for k in 2..=3usize {
            let n = make_proof_channel(
                ProofVariant::MaxEntangled { k },
                &states::maximally_entangled(k),
                None,
            )
            .unwrap();
            assert_eq!(n.input_dims(), (k * k, k));
            assert_eq!(n.output_dims(), (k * k, 1));

            let phi = states::maximally_entangled(k);
            let input_m = linalg::permute_systems(
                &linalg::kron(phi.matrix(), &ComplexMatrix::identity(k).scale(1.0 / k as f64)),
                &[k, k, k],
                &[0, 2, 1],
            )
            .unwrap();
            let input = make_state(input_m, k * k, k).unwrap();
            let out = apply(&n, &input).unwrap();
            let mut want = ComplexMatrix::zeros(k * k, k * k);
            want[(0, 0)] = Complex64::new(1.0, 0.0);
            assert!(out.matrix().sub(&want).max_abs() < 1e-10, "k={k}");

            // uniform Alice input with an arbitrary Bob state comes out uniform
            let sigma = sample_random((k, 1), SampleKind::Ginibre, k as u64);
            let flat_in = make_state(
                linalg::kron(
                    &ComplexMatrix::identity(k * k).scale(1.0 / (k * k) as f64),
                    sigma.matrix(),
                ),
                k * k,
                k,
            )
            .unwrap();
            let flat_out = apply(&n, &flat_in).unwrap();
            let u_x = ComplexMatrix::identity(k * k).scale(1.0 / (k * k) as f64);
            assert!(flat_out.matrix().sub(&u_x).max_abs() < 1e-10, "k={k}");

            let report = check_properties(&n);
            assert!(report.conditionally_unital, "k={k}: {:?}", report.residuals);
            assert!(report.semi_causal, "k={k}: {:?}", report.residuals);
        }
    }

    #[test]
    fn balanced_channels_never_decrease_conditional_entropies() {
        for seed in 0..6 {
            let rho = if seed % 2 == 0 {
                sample_random((2, 2), SampleKind::Ginibre, seed)
            } else {
                entangled_noise_mix(2, 0.5 + 0.08 * seed as f64)
            };
            let n = sample_b_controlled(2, 2, 3, 40 + seed);
            let pushed = apply(&n, &rho).unwrap();
            assert!(hmin(&pushed).value >= hmin(&rho).value - 1e-7, "seed {seed}");
            let before = conditional_entropy(DivergenceKind::Umegaki, &rho).unwrap().value;
            let after = conditional_entropy(DivergenceKind::Umegaki, &pushed).unwrap().value;
            assert!(after >= before - 1e-7, "seed {seed}: {after} < {before}");
        }
    }
}
