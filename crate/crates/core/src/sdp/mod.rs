//! Block-structured conic optimization over products of real symmetric
//! positive-semidefinite cones and nonnegative orthants.
//!
//! Problems are stated in standard equality form: minimize a linear
//! functional of the block variable subject to linear equalities, with each
//! block constrained to its cone. Two entry points cover every use in this
//! crate: [`solve`] for optimization and [`check_feasible`] for pure
//! feasibility questions, which are answered by minimizing the largest
//! equality violation and comparing it against [`EPS_FEAS`](crate::tol::EPS_FEAS).
//!
//! The solver is real. Complex Hermitian data enters through
//! [`Functional::add_hermitian`], which lowers a Hermitian coefficient
//! matrix `H` to the real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`
//! with a 1/2 factor so functional values equal `Tr[H X]`; a psd block
//! holding such an embedded variable is read back with
//! [`extract_hermitian`]. Exactly-real Hermitian data can skip the doubling
//! via [`Functional::add_real_symmetric`].
//!
//! Everything is deterministic: fixed starting point, fixed step rule, no
//! randomization, so repeated calls on the same problem bit-agree.

mod dense;
mod ipm;

use crate::linalg::ComplexMatrix;
use crate::tol::{EPS_FEAS, EPS_SDP};
use num_complex::Complex64;
use thiserror::Error;

/// One cone block of the variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSpec {
    /// Real symmetric positive-semidefinite block of the given side length.
    Psd(usize),
    /// Componentwise-nonnegative block of the given length.
    Nonneg(usize),
}

impl BlockSpec {
    pub(crate) fn order(&self) -> usize {
        match *self {
            BlockSpec::Psd(n) | BlockSpec::Nonneg(n) => n,
        }
    }
}

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("malformed problem: {context}")]
    BadProblem { context: String },
    #[error("numerical breakdown: {context}")]
    NumericalBreakdown { context: String },
}

/// Sparse real linear functional of the block variable.
///
/// A psd entry `(block, r, c, v)` with `r <= c` denotes a symmetric
/// coefficient matrix holding `v` at both `(r, c)` and `(c, r)`, so an
/// off-diagonal entry contributes `v * (X[r,c] + X[c,r])` to the value.
/// Pushing the same position twice accumulates.
#[derive(Clone, Debug, Default)]
pub struct Functional {
    psd: Vec<(usize, usize, usize, f64)>,
    lin: Vec<(usize, usize, f64)>,
}

impl Functional {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a symmetric coefficient at the unordered pair `{row, col}` of a
    /// psd block.
    pub fn psd_entry(mut self, block: usize, row: usize, col: usize, value: f64) -> Self {
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        self.psd.push((block, r, c, value));
        self
    }

    /// Adds a coefficient at one component of a nonneg block.
    pub fn lin_entry(mut self, block: usize, index: usize, value: f64) -> Self {
        self.lin.push((block, index, value));
        self
    }

    /// Adds `weight * H` against a psd block holding the real embedding of a
    /// complex Hermitian variable, so the functional gains `weight * Tr[H X]`.
    pub fn add_hermitian(&mut self, block: usize, h: &ComplexMatrix, weight: f64) {
        let n = h.dim();
        for r in 0..n {
            for c in 0..n {
                let z = h[(r, c)] * (0.5 * weight);
                if r <= c && z.re != 0.0 {
                    self.psd.push((block, r, c, z.re));
                    self.psd.push((block, n + r, n + c, z.re));
                }
                if z.im != 0.0 {
                    self.psd.push((block, r, n + c, -z.im));
                }
            }
        }
    }

    /// Adds `weight * H` against a plain psd block for exactly-real
    /// symmetric `H`; the functional gains `weight * Tr[H X]`.
    ///
    /// Panics when `H` has any imaginary part: deciding whether a problem
    /// may use the undoubled real path is the caller's responsibility and
    /// must not silently drop data.
    pub fn add_real_symmetric(&mut self, block: usize, h: &ComplexMatrix, weight: f64) {
        let n = h.dim();
        for r in 0..n {
            for c in 0..n {
                assert!(h[(r, c)].im == 0.0, "coefficient matrix must be exactly real");
            }
        }
        for r in 0..n {
            for c in r..n {
                let v = h[(r, c)].re * weight;
                if v != 0.0 {
                    self.psd.push((block, r, c, v));
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.psd.is_empty() && self.lin.is_empty()
    }

    /// Evaluates the functional at explicit block values.
    pub fn value(&self, values: &[BlockValue]) -> f64 {
        let mut acc = 0.0;
        for &(b, r, c, v) in &self.psd {
            if let BlockValue::Psd { n, mat } = &values[b] {
                acc += if r == c { v * mat[r * n + r] } else { v * (mat[r * n + c] + mat[c * n + r]) };
            }
        }
        for &(b, k, v) in &self.lin {
            if let BlockValue::Nonneg(xs) = &values[b] {
                acc += v * xs[k];
            }
        }
        acc
    }
}

/// One linear equality `<functional, X> = rhs`.
#[derive(Clone, Debug)]
pub struct Equality {
    pub functional: Functional,
    pub rhs: f64,
}

impl Equality {
    pub fn new(functional: Functional, rhs: f64) -> Self {
        Equality { functional, rhs }
    }
}

/// Minimize `objective` over the cone blocks subject to `equalities`.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub blocks: Vec<BlockSpec>,
    pub objective: Functional,
    pub equalities: Vec<Equality>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Indeterminate,
}

/// Relative residuals of the returned iterate: equality violation, dual
/// violation, and duality gap, each scaled by the problem data.
#[derive(Clone, Copy, Debug)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Value of one block, row-major for psd blocks.
#[derive(Clone, Debug)]
pub enum BlockValue {
    Psd { n: usize, mat: Vec<f64> },
    Nonneg(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub objective_value: f64,
    pub primal: Vec<BlockValue>,
    pub dual: Vec<f64>,
    pub residuals: Residuals,
}

/// Answer to a feasibility question: `slack` is the smallest attained
/// largest equality violation (the phase-1 objective), and the witness is
/// present exactly when the system is declared feasible.
#[derive(Clone, Debug)]
pub struct Feasibility {
    pub feasible: bool,
    pub slack: f64,
    pub witness: Option<Vec<BlockValue>>,
}

/// Reads a complex Hermitian matrix back out of a psd block that holds its
/// real embedding. Works for any symmetric block content via conjugation
/// averaging, which preserves positive semidefiniteness.
pub fn extract_hermitian(value: &BlockValue) -> Result<ComplexMatrix, SdpError> {
    let BlockValue::Psd { n, mat } = value else {
        return Err(SdpError::BadProblem { context: "expected a psd block".to_string() });
    };
    if n % 2 != 0 {
        return Err(SdpError::BadProblem {
            context: format!("embedded block must have even side, got {n}"),
        });
    }
    let d = n / 2;
    let at = |r: usize, c: usize| mat[r * n + c];
    Ok(ComplexMatrix::from_fn(d, d, |r, c| {
        Complex64::new(
            0.5 * (at(r, c) + at(d + r, d + c)),
            0.5 * (at(c, d + r) - at(r, d + c)),
        )
    }))
}

fn validate_functional(blocks: &[BlockSpec], f: &Functional, what: &str) -> Result<(), SdpError> {
    let bad = |context: String| Err(SdpError::BadProblem { context });
    for &(b, r, c, v) in &f.psd {
        match blocks.get(b) {
            Some(BlockSpec::Psd(n)) => {
                if r > c || c >= *n {
                    return bad(format!("{what}: psd entry ({r}, {c}) out of range for block {b}"));
                }
            }
            Some(BlockSpec::Nonneg(_)) => {
                return bad(format!("{what}: psd entry aimed at nonneg block {b}"));
            }
            None => return bad(format!("{what}: block index {b} out of range")),
        }
        if !v.is_finite() {
            return bad(format!("{what}: non-finite coefficient"));
        }
    }
    for &(b, k, v) in &f.lin {
        match blocks.get(b) {
            Some(BlockSpec::Nonneg(n)) => {
                if k >= *n {
                    return bad(format!("{what}: lin entry {k} out of range for block {b}"));
                }
            }
            Some(BlockSpec::Psd(_)) => {
                return bad(format!("{what}: lin entry aimed at psd block {b}"));
            }
            None => return bad(format!("{what}: block index {b} out of range")),
        }
        if !v.is_finite() {
            return bad(format!("{what}: non-finite coefficient"));
        }
    }
    Ok(())
}

fn validate_blocks(blocks: &[BlockSpec]) -> Result<(), SdpError> {
    if blocks.is_empty() {
        return Err(SdpError::BadProblem { context: "at least one block required".to_string() });
    }
    if blocks.iter().any(|b| b.order() == 0) {
        return Err(SdpError::BadProblem { context: "zero-dimensional block".to_string() });
    }
    Ok(())
}

fn lower_row(f: &Functional) -> ipm::RowCoeffs {
    ipm::RowCoeffs {
        psd: f.psd.iter().map(|&(b, r, c, v)| (b as u32, r as u32, c as u32, v)).collect(),
        lin: f.lin.iter().map(|&(b, k, v)| (b as u32, k as u32, v)).collect(),
    }
}

fn lower_equalities(
    blocks: &[BlockSpec],
    equalities: &[Equality],
) -> Result<(Vec<ipm::RowCoeffs>, Vec<f64>), SdpError> {
    let mut rows = Vec::with_capacity(equalities.len());
    let mut b = Vec::with_capacity(equalities.len());
    for (i, eq) in equalities.iter().enumerate() {
        validate_functional(blocks, &eq.functional, &format!("equality {i}"))?;
        if !eq.rhs.is_finite() {
            return Err(SdpError::BadProblem { context: format!("equality {i}: non-finite rhs") });
        }
        rows.push(lower_row(&eq.functional));
        b.push(eq.rhs);
    }
    Ok((rows, b))
}

fn lower_objective(blocks: &[BlockSpec], objective: &Functional) -> Result<Vec<ipm::BVar>, SdpError> {
    validate_functional(blocks, objective, "objective")?;
    let mut c: Vec<ipm::BVar> = blocks.iter().map(ipm::BVar::zeros).collect();
    for &(b, r, c_idx, v) in &objective.psd {
        if let ipm::BVar::Psd(m) = &mut c[b] {
            *m.at_mut(r, c_idx) += v;
            if r != c_idx {
                *m.at_mut(c_idx, r) += v;
            }
        }
    }
    for &(b, k, v) in &objective.lin {
        if let ipm::BVar::Lin(xs) = &mut c[b] {
            xs[k] += v;
        }
    }
    Ok(c)
}

fn export_blocks(vars: &[ipm::BVar], count: usize) -> Vec<BlockValue> {
    vars.iter()
        .take(count)
        .map(|v| match v {
            ipm::BVar::Psd(m) => BlockValue::Psd { n: m.n, mat: m.a.clone() },
            ipm::BVar::Lin(xs) => BlockValue::Nonneg(xs.clone()),
        })
        .collect()
}

/// Solves the conic program to relative accuracy
/// [`EPS_SDP`](crate::tol::EPS_SDP). Hitting the iteration cap returns the
/// best iterate with status [`SolveStatus::Indeterminate`] rather than an
/// error; [`SdpError::NumericalBreakdown`] is reserved for runs that produce
/// no usable iterate at all.
pub fn solve(problem: &ConicProblem) -> Result<ConicSolution, SdpError> {
    validate_blocks(&problem.blocks)?;
    if problem.equalities.is_empty() {
        return Err(SdpError::BadProblem {
            context: "at least one equality required".to_string(),
        });
    }
    let (rows, b) = lower_equalities(&problem.blocks, &problem.equalities)?;
    let c = lower_objective(&problem.blocks, &problem.objective)?;
    let data = ipm::ProblemData { blocks: problem.blocks.clone(), rows, b, c };
    let cfg = ipm::IpmConfig {
        tol: EPS_SDP,
        max_iters: ipm::MAX_ITERS,
        paired: None,
        early_exit: None,
        detect_farkas: true,
        start: None,
    };
    let outcome = ipm::run(&data, &cfg)?;
    let status = match outcome.status {
        ipm::IpmStatus::Converged => SolveStatus::Optimal,
        ipm::IpmStatus::FarkasInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::Indeterminate,
    };
    Ok(ConicSolution {
        status,
        objective_value: outcome.objective,
        primal: export_blocks(&outcome.x, problem.blocks.len()),
        dual: outcome.y,
        residuals: Residuals { primal: outcome.pinf, dual: outcome.dinf, gap: outcome.gap },
    })
}

/// Decides whether the equalities admit a point in the cone product by
/// minimizing the largest violation; feasible iff that minimum is at most
/// [`EPS_FEAS`](crate::tol::EPS_FEAS). A solver that cannot decide maps to
/// `feasible = false` with infinite slack.
pub fn check_feasible(
    blocks: &[BlockSpec],
    equalities: &[Equality],
) -> Result<Feasibility, SdpError> {
    check_feasible_with(blocks, equalities, true, true, false)
}

/// `certified_exit` lets clearly infeasible systems return as soon as the
/// dual bound proves `t* > eps_feas`, trading the converged slack value for
/// speed; the reported slack is then the proven lower bound on `t*`.
pub(crate) fn check_feasible_with(
    blocks: &[BlockSpec],
    equalities: &[Equality],
    structured: bool,
    early_exit: bool,
    certified_exit: bool,
) -> Result<Feasibility, SdpError> {
    validate_blocks(blocks)?;
    if equalities.is_empty() {
        let witness = blocks
            .iter()
            .map(|sp| match *sp {
                BlockSpec::Psd(n) => BlockValue::Psd {
                    n,
                    mat: {
                        let mut m = vec![0.0; n * n];
                        for i in 0..n {
                            m[i * n + i] = 1.0;
                        }
                        m
                    },
                },
                BlockSpec::Nonneg(n) => BlockValue::Nonneg(vec![1.0; n]),
            })
            .collect();
        return Ok(Feasibility { feasible: true, slack: 0.0, witness: Some(witness) });
    }
    let (rows, b) = lower_equalities(blocks, equalities)?;
    let (data, start, layout) = ipm::phase1(blocks, &rows, &b);
    let cfg = ipm::IpmConfig {
        tol: EPS_SDP,
        max_iters: ipm::MAX_ITERS,
        paired: structured.then_some(layout),
        early_exit: early_exit.then_some(ipm::EarlyExit {
            rows: equalities.len(),
            x_blocks: blocks.len(),
            threshold: 0.25 * EPS_FEAS,
            infeasible_above: certified_exit.then_some(100.0 * EPS_FEAS),
        }),
        detect_farkas: false,
        start: Some(start),
    };
    let outcome = ipm::run(&data, &cfg)?;
    let witness_violation = |x: &[ipm::BVar]| -> f64 {
        data.rows[..equalities.len()]
            .iter()
            .zip(&b)
            .map(|(row, &bi)| (ipm::row_value(row, x, blocks.len()) - bi).abs())
            .fold(0.0f64, f64::max)
    };
    match outcome.status {
        ipm::IpmStatus::EarlyFeasible => Ok(Feasibility {
            feasible: true,
            slack: witness_violation(&outcome.x),
            witness: Some(export_blocks(&outcome.x, blocks.len())),
        }),
        // the dual bound proves t* > eps_feas, so the verdict matches what
        // full convergence would return
        ipm::IpmStatus::CertifiedInfeasible => Ok(Feasibility {
            feasible: false,
            slack: outcome.dual_objective.max(0.0),
            witness: None,
        }),
        ipm::IpmStatus::Converged => {
            let t_star = outcome.objective.max(0.0);
            if t_star <= EPS_FEAS {
                Ok(Feasibility {
                    feasible: true,
                    slack: witness_violation(&outcome.x).min(t_star).max(0.0),
                    witness: Some(export_blocks(&outcome.x, blocks.len())),
                })
            } else {
                Ok(Feasibility { feasible: false, slack: t_star, witness: None })
            }
        }
        _ => Ok(Feasibility { feasible: false, slack: f64::INFINITY, witness: None }),
    }
}
