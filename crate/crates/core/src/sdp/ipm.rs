//! Interior-point engine behind [`solve`](super::solve) and
//! [`check_feasible`](super::check_feasible): infeasible-start primal-dual
//! iteration with Nesterov-Todd scaling and a Mehrotra corrector.
//!
//! Everything here is real and deterministic. Each iteration computes the
//! scaling point per block, assembles the Schur complement of the Newton
//! system, and takes damped steps toward the central path. Feasibility runs
//! carry paired slack rows; their Schur matrix has a 2x2 block structure
//! that the paired solver exploits so the factored system has the original
//! row count rather than twice it.

use super::dense::{self, Mat};
use super::{BlockSpec, SdpError};

pub(super) const MAX_ITERS: usize = 200;
const STEP_DAMP: f64 = 0.99;
// relative floor applied to eigenvalues when forming the scaling point
const EIG_CLIP_REL: f64 = 1e-16;
// keeps slack-ratio inversions from overflowing near the boundary

/// Sparse coefficients of one equality row. Psd entries are (block, r, c, v)
/// with r <= c and the (c, r) mirror implied; lin entries are (block, k, v).
#[derive(Clone, Debug, Default)]
pub(super) struct RowCoeffs {
    pub psd: Vec<(u32, u32, u32, f64)>,
    pub lin: Vec<(u32, u32, f64)>,
}

impl RowCoeffs {
    pub fn max_abs(&self) -> f64 {
        let a = self.psd.iter().fold(0.0f64, |m, e| m.max(e.3.abs()));
        self.lin.iter().fold(a, |m, e| m.max(e.2.abs()))
    }
}

/// One block of a primal or dual cone variable.
#[derive(Clone, Debug)]
pub(super) enum BVar {
    Psd(Mat),
    Lin(Vec<f64>),
}

impl BVar {
    pub fn identity(spec: &BlockSpec, scale: f64) -> BVar {
        match *spec {
            BlockSpec::Psd(n) => {
                let mut m = Mat::identity(n);
                m.scale(scale);
                BVar::Psd(m)
            }
            BlockSpec::Nonneg(n) => BVar::Lin(vec![scale; n]),
        }
    }

    pub fn zeros(spec: &BlockSpec) -> BVar {
        match *spec {
            BlockSpec::Psd(n) => BVar::Psd(Mat::zeros(n)),
            BlockSpec::Nonneg(n) => BVar::Lin(vec![0.0; n]),
        }
    }

    pub fn dot(&self, other: &BVar) -> f64 {
        match (self, other) {
            (BVar::Psd(a), BVar::Psd(b)) => a.dot(b),
            (BVar::Lin(a), BVar::Lin(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            _ => unreachable!("block kind mismatch"),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            BVar::Psd(a) => a.max_abs(),
            BVar::Lin(a) => a.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
        }
    }

    pub fn add_scaled(&mut self, other: &BVar, s: f64) {
        match (self, other) {
            (BVar::Psd(a), BVar::Psd(b)) => a.add_scaled(b, s),
            (BVar::Lin(a), BVar::Lin(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += s * y;
                }
            }
            _ => unreachable!("block kind mismatch"),
        }
    }

    pub fn all_finite(&self) -> bool {
        match self {
            BVar::Psd(a) => a.a.iter().all(|v| v.is_finite()),
            BVar::Lin(a) => a.iter().all(|v| v.is_finite()),
        }
    }
}

fn bvars_dot(a: &[BVar], b: &[BVar]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn bvars_max_abs(a: &[BVar]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.max_abs()))
}

/// Lowered problem: minimize <c, x> over the cone blocks subject to the
/// equality rows.
pub(super) struct ProblemData {
    pub blocks: Vec<BlockSpec>,
    pub rows: Vec<RowCoeffs>,
    pub b: Vec<f64>,
    pub c: Vec<BVar>,
}

/// `<row, x>` restricted to blocks below `block_limit`.
pub(super) fn row_value(row: &RowCoeffs, x: &[BVar], block_limit: usize) -> f64 {
    let mut acc = 0.0;
    for &(bi, r, c, v) in &row.psd {
        let bi = bi as usize;
        if bi >= block_limit {
            continue;
        }
        if let BVar::Psd(m) = &x[bi] {
            let (r, c) = (r as usize, c as usize);
            acc += if r == c { v * m.at(r, r) } else { v * (m.at(r, c) + m.at(c, r)) };
        }
    }
    for &(bi, k, v) in &row.lin {
        let bi = bi as usize;
        if bi >= block_limit {
            continue;
        }
        if let BVar::Lin(xs) = &x[bi] {
            acc += v * xs[k as usize];
        }
    }
    acc
}

/// Accumulates `sign * sum_i y_i A_i` into `target`.
fn add_adjoint(target: &mut [BVar], rows: &[RowCoeffs], y: &[f64], sign: f64) {
    for (row, &yi) in rows.iter().zip(y) {
        if yi == 0.0 {
            continue;
        }
        let s = sign * yi;
        for &(bi, r, c, v) in &row.psd {
            if let BVar::Psd(m) = &mut target[bi as usize] {
                let (r, c) = (r as usize, c as usize);
                *m.at_mut(r, c) += s * v;
                if r != c {
                    *m.at_mut(c, r) += s * v;
                }
            }
        }
        for &(bi, k, v) in &row.lin {
            if let BVar::Lin(xs) = &mut target[bi as usize] {
                xs[k as usize] += s * v;
            }
        }
    }
}

/// Nesterov-Todd scaling of one block. For psd blocks `r` satisfies
/// `r^T s r = r^{-1} x r^{-T} = diag(d)` and `w = r r^T` solves `w s w = x`;
/// for lin blocks `w2 = x/s` componentwise and `d = sqrt(x s)`.
enum Scaling {
    Psd { r: Mat, w: Mat, d: Vec<f64> },
    Lin { w2: Vec<f64>, d: Vec<f64> },
}

impl Scaling {
    fn order(&self) -> usize {
        match self {
            Scaling::Psd { d, .. } | Scaling::Lin { d, .. } => d.len(),
        }
    }
}

fn nt_scaling(x: &BVar, s: &BVar) -> Option<Scaling> {
    match (x, s) {
        (BVar::Psd(xm), BVar::Psd(sm)) => {
            let (lx, ux) = dense::eig_sym(xm, true);
            let ux = ux.expect("vectors requested");
            let xmax = *lx.last()?;
            if !(xmax > 0.0) || !xmax.is_finite() {
                return None;
            }
            let floor = xmax * EIG_CLIP_REL;
            let roots: Vec<f64> = lx.iter().map(|&v| v.max(floor).sqrt()).collect();
            let xh = dense::from_eigs(&roots, &ux);
            let m = dense::sandwich(&xh, sm);
            let (lm, um) = dense::eig_sym(&m, true);
            let um = um.expect("vectors requested");
            let mmax = *lm.last()?;
            if !(mmax > 0.0) || !mmax.is_finite() {
                return None;
            }
            let mfloor = mmax * EIG_CLIP_REL;
            let lm: Vec<f64> = lm.iter().map(|&v| v.max(mfloor)).collect();
            let mut r = dense::matmul(&xh, &um);
            let n = r.n;
            for c in 0..n {
                let sc = lm[c].powf(-0.25);
                for row in 0..n {
                    r.a[row * n + c] *= sc;
                }
            }
            let mut w = dense::matmul(&r, &r.transpose());
            w.symmetrize();
            let d: Vec<f64> = lm.iter().map(|&v| v.sqrt()).collect();
            Some(Scaling::Psd { r, w, d })
        }
        (BVar::Lin(xv), BVar::Lin(sv)) => {
            let mut w2 = Vec::with_capacity(xv.len());
            let mut d = Vec::with_capacity(xv.len());
            for (&xi, &si) in xv.iter().zip(sv) {
                if !(xi > 0.0 && si > 0.0) || !(xi.is_finite() && si.is_finite()) {
                    return None;
                }
                w2.push(xi / si);
                d.push((xi * si).sqrt());
            }
            Some(Scaling::Lin { w2, d })
        }
        _ => unreachable!("block kind mismatch"),
    }
}

/// `w v w` for the block scaling.
fn scaled_wrw(sc: &Scaling, v: &BVar) -> BVar {
    match (sc, v) {
        (Scaling::Psd { w, .. }, BVar::Psd(m)) => {
            let mut out = dense::sandwich(w, m);
            out.symmetrize();
            BVar::Psd(out)
        }
        (Scaling::Lin { w2, .. }, BVar::Lin(v)) => {
            BVar::Lin(v.iter().zip(w2).map(|(a, b)| a * b).collect())
        }
        _ => unreachable!("block kind mismatch"),
    }
}

/// `r^T ds r`, the dual direction seen in scaled coordinates.
fn scale_dual(sc: &Scaling, ds: &BVar) -> BVar {
    match (sc, ds) {
        (Scaling::Psd { r, .. }, BVar::Psd(m)) => {
            let mut out = dense::sandwich_t(r, m);
            out.symmetrize();
            BVar::Psd(out)
        }
        (Scaling::Lin { w2, .. }, BVar::Lin(v)) => {
            BVar::Lin(v.iter().zip(w2).map(|(a, b)| a * b.sqrt()).collect())
        }
        _ => unreachable!("block kind mismatch"),
    }
}

/// `r g r^T`, taking a scaled primal direction back to the original space.
fn unscale_primal(sc: &Scaling, g: &BVar) -> BVar {
    match (sc, g) {
        (Scaling::Psd { r, .. }, BVar::Psd(m)) => {
            let mut out = dense::sandwich(r, m);
            out.symmetrize();
            BVar::Psd(out)
        }
        (Scaling::Lin { w2, .. }, BVar::Lin(v)) => {
            BVar::Lin(v.iter().zip(w2).map(|(a, b)| a * b.sqrt()).collect())
        }
        _ => unreachable!("block kind mismatch"),
    }
}

/// Diagonal of the scaled point, negated: the affine-step target.
fn g_affine(sc: &Scaling) -> BVar {
    match sc {
        Scaling::Psd { d, .. } => {
            let n = d.len();
            let mut m = Mat::zeros(n);
            for i in 0..n {
                m.a[i * n + i] = -d[i];
            }
            BVar::Psd(m)
        }
        Scaling::Lin { d, .. } => BVar::Lin(d.iter().map(|&v| -v).collect()),
    }
}

/// Solves the scaled-space Jordan system for the corrector target
/// `sigma*mu*I - d^2 - dxh o dsh`.
fn corrector_g(sc: &Scaling, dxh: &BVar, dsh: &BVar, sigma_mu: f64) -> BVar {
    match (sc, dxh, dsh) {
        (Scaling::Psd { d, .. }, BVar::Psd(a), BVar::Psd(b)) => {
            let n = d.len();
            let mut v = dense::jordan(a, b);
            v.scale(-1.0);
            for i in 0..n {
                v.a[i * n + i] += sigma_mu - d[i] * d[i];
            }
            let mut g = Mat::zeros(n);
            for r in 0..n {
                for c in 0..n {
                    g.a[r * n + c] = 2.0 * v.a[r * n + c] / (d[r] + d[c]);
                }
            }
            BVar::Psd(g)
        }
        (Scaling::Lin { d, .. }, BVar::Lin(a), BVar::Lin(b)) => BVar::Lin(
            d.iter()
                .zip(a.iter().zip(b))
                .map(|(&dk, (&ak, &bk))| (sigma_mu - dk * dk - ak * bk) / dk)
                .collect(),
        ),
        _ => unreachable!("block kind mismatch"),
    }
}

/// Largest step with `diag(d) + alpha * dh` staying in the cone.
fn step_to_boundary(sc: &Scaling, dh: &BVar) -> f64 {
    match (sc, dh) {
        (Scaling::Psd { d, .. }, BVar::Psd(m)) => {
            let n = m.n;
            let mut b = m.clone();
            for r in 0..n {
                for c in 0..n {
                    b.a[r * n + c] /= (d[r] * d[c]).sqrt();
                }
            }
            // a blown-up direction is unusable; report a zero step so the
            // caller stalls out instead of leaving the cone
            if !b.a.iter().all(|v| v.is_finite()) {
                return 0.0;
            }
            let (vals, _) = dense::eig_sym(&b, false);
            let lmin = vals[0];
            if lmin >= 0.0 {
                f64::INFINITY
            } else {
                1.0 / (-lmin)
            }
        }
        (Scaling::Lin { d, .. }, BVar::Lin(v)) => {
            let mut a = f64::INFINITY;
            for (&dk, &vk) in d.iter().zip(v) {
                if !vk.is_finite() {
                    return 0.0;
                }
                if vk < 0.0 {
                    a = a.min(dk / -vk);
                }
            }
            a
        }
        _ => unreachable!("block kind mismatch"),
    }
}

fn diag_dot(sc: &Scaling, dh: &BVar) -> f64 {
    match (sc, dh) {
        (Scaling::Psd { d, .. }, BVar::Psd(m)) => {
            d.iter().enumerate().map(|(i, &di)| di * m.at(i, i)).sum()
        }
        (Scaling::Lin { d, .. }, BVar::Lin(v)) => d.iter().zip(v).map(|(a, b)| a * b).sum(),
        _ => unreachable!("block kind mismatch"),
    }
}

/// Layout hint for feasibility runs built by [`phase1`]: rows come in pairs
/// `(i, pairs + i)` sharing their coefficients on the first `x_blocks`
/// blocks, followed by the two slack blocks and the scalar bound block.
pub(super) struct PairedLayout {
    pub pairs: usize,
    pub x_blocks: usize,
}

/// Stop early once the first `rows` equalities, restricted to the first
/// `x_blocks` blocks, are satisfied within `threshold`; or, when
/// `infeasible_above` is set, once an essentially dual-feasible iterate
/// certifies by weak duality that the phase-1 optimum exceeds that bound.
/// The dual bound is trusted only below [`CERTIFY_DINF`] so that residual
/// noise cannot fake a certificate; near-threshold problems never trigger
/// it and run to full convergence instead.
pub(super) struct EarlyExit {
    pub rows: usize,
    pub x_blocks: usize,
    pub threshold: f64,
    pub infeasible_above: Option<f64>,
}

const CERTIFY_DINF: f64 = 1e-11;

pub(super) struct IpmConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub paired: Option<PairedLayout>,
    pub early_exit: Option<EarlyExit>,
    pub detect_farkas: bool,
    pub start: Option<(Vec<BVar>, Vec<f64>, Vec<BVar>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(super) enum IpmStatus {
    Converged,
    EarlyFeasible,
    CertifiedInfeasible,
    IterationLimit,
    Stalled,
    FarkasInfeasible,
}

pub(super) struct IpmOutcome {
    pub status: IpmStatus,
    pub x: Vec<BVar>,
    pub y: Vec<f64>,
    #[allow(dead_code)]
    pub s: Vec<BVar>,
    pub objective: f64,
    pub dual_objective: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub gap: f64,
}

struct Snapshot {
    score: f64,
    x: Vec<BVar>,
    y: Vec<f64>,
    s: Vec<BVar>,
    objective: f64,
    dual_objective: f64,
    pinf: f64,
    dinf: f64,
    gap: f64,
}

enum SchurSolver {
    Generic { s: Mat, l: Mat },
    Paired(PairedState),
}

impl SchurSolver {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            SchurSolver::Generic { s, l } => {
                let mut z = rhs.to_vec();
                dense::chol_solve(l, &mut z);
                let matvec = |v: &[f64]| -> Vec<f64> {
                    (0..s.n)
                        .map(|i| s.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
                        .collect()
                };
                refine(rhs, &mut z, matvec, |r| {
                    let mut d = r.to_vec();
                    dense::chol_solve(l, &mut d);
                    d
                });
                z
            }
            SchurSolver::Paired(p) => p.solve(rhs),
        }
    }
}

/// Factored form of `[[P+Wu, P], [P, P+Wv]] + wt * c c^T` with `c = [-1; +1]`.
/// Block elimination collapses the doubled system onto `u = z1 + z2`, whose
/// matrix is the SPD `diag(h) + P` with harmonic slack weights
/// `h = Wu Wv / (Wu + Wv)`; the rank-one `wt` coupling is then removed by a
/// Sherman-Morrison step against the cached `K^{-1} c`. The back-substitution
/// divides by the slack weights, so the reduction loses accuracy once those
/// spread apart near an optimum; every solve is therefore checked against the
/// exact structured apply, falling back to a lazily factored full 2m system
/// for the sharp final iterations only.
struct PairedState {
    p: Mat,
    wu2: Vec<f64>,
    wv2: Vec<f64>,
    wt2: f64,
    /// Reduced factor: Cholesky of `diag(h) + P`, the weight splits
    /// `wv2/(wu2+wv2)` and `wu2/(wu2+wv2)`, the cached `K^{-1} c`, and the
    /// Sherman-Morrison denominator `1 + wt2 c^T K^{-1} c`.
    reduced: Option<Reduced>,
    full: std::cell::OnceCell<Option<Mat>>,
}

struct Reduced {
    fl: Mat,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    g: Vec<f64>,
    denom: f64,
}

impl PairedState {
    fn build(p: Mat, wu2: Vec<f64>, wv2: Vec<f64>, wt2: f64) -> Option<PairedState> {
        let m = p.n;
        if (0..m).any(|i| !(wu2[i] + wv2[i]).is_finite() || !(wu2[i] + wv2[i] > 0.0)) {
            return None;
        }
        let mut state = PairedState {
            p,
            wu2,
            wv2,
            wt2,
            reduced: None,
            full: std::cell::OnceCell::new(),
        };
        state.reduced = state.build_reduced();
        if state.reduced.is_none() && state.full_factor().is_none() {
            return None;
        }
        Some(state)
    }

    fn build_reduced(&self) -> Option<Reduced> {
        let m = self.p.n;
        let mut alpha = vec![0.0; m];
        let mut beta = vec![0.0; m];
        let mut collapsed = self.p.clone();
        for i in 0..m {
            let sum = self.wu2[i] + self.wv2[i];
            alpha[i] = self.wv2[i] / sum;
            beta[i] = self.wu2[i] / sum;
            collapsed.a[i * m + i] += alpha[i] * self.wu2[i];
        }
        let fl = factor_ladder(&collapsed)?;
        let mut red = Reduced { fl, alpha, beta, g: Vec::new(), denom: 1.0 };
        let ones = vec![1.0; m];
        let neg = vec![-1.0; m];
        let g = self.k_solve(&red, &neg, &ones);
        let ct_g: f64 = g[m..].iter().sum::<f64>() - g[..m].iter().sum::<f64>();
        let denom = 1.0 + self.wt2 * ct_g;
        if !(denom > 0.0) || !denom.is_finite() {
            return None;
        }
        red.g = g;
        red.denom = denom;
        Some(red)
    }

    /// Solves `K z = [r1; r2]` through the reduced SPD factor.
    fn k_solve(&self, red: &Reduced, r1: &[f64], r2: &[f64]) -> Vec<f64> {
        let m = self.p.n;
        let mut u: Vec<f64> =
            (0..m).map(|i| red.alpha[i] * r1[i] + red.beta[i] * r2[i]).collect();
        dense::chol_solve(&red.fl, &mut u);
        let mut pu = vec![0.0; m];
        for i in 0..m {
            let row = self.p.row(i);
            let mut acc = 0.0;
            for (pv, uv) in row.iter().zip(&u) {
                acc += pv * uv;
            }
            pu[i] = acc;
        }
        let mut z = Vec::with_capacity(2 * m);
        for i in 0..m {
            z.push((r1[i] - pu[i]) / self.wu2[i]);
        }
        for i in 0..m {
            z.push((r2[i] - pu[i]) / self.wv2[i]);
        }
        z
    }

    /// One reduced solve of the full system including the rank-one term.
    fn solve_once(&self, red: &Reduced, rhs: &[f64]) -> Vec<f64> {
        let m = self.p.n;
        let mut z = self.k_solve(red, &rhs[..m], &rhs[m..]);
        let ct_z: f64 = z[m..].iter().sum::<f64>() - z[..m].iter().sum::<f64>();
        let scale = self.wt2 * ct_z / red.denom;
        for (zi, gi) in z.iter_mut().zip(&red.g) {
            *zi -= scale * gi;
        }
        z
    }

    /// Assembles and factors the explicit doubled matrix; cached because it
    /// is only worth paying for when the reduced path degrades.
    fn full_factor(&self) -> Option<&Mat> {
        self.full
            .get_or_init(|| {
                let m = self.p.n;
                let n = 2 * m;
                let mut s = Mat::zeros(n);
                for r in 0..m {
                    for c in 0..m {
                        let pv = self.p.at(r, c);
                        s.a[r * n + c] = pv + self.wt2;
                        s.a[r * n + m + c] = pv - self.wt2;
                        s.a[(m + r) * n + c] = pv - self.wt2;
                        s.a[(m + r) * n + m + c] = pv + self.wt2;
                    }
                    s.a[r * n + r] += self.wu2[r];
                    s.a[(m + r) * n + m + r] += self.wv2[r];
                }
                factor_ladder(&s)
            })
            .as_ref()
    }

    /// Applies the system matrix exactly from its pieces.
    fn apply(&self, z: &[f64]) -> Vec<f64> {
        let m = self.p.n;
        let (z1, z2) = z.split_at(m);
        let w: Vec<f64> = (0..m).map(|i| z1[i] + z2[i]).collect();
        let mut pw = vec![0.0; m];
        for i in 0..m {
            let row = self.p.row(i);
            let mut acc = 0.0;
            for (pv, wv) in row.iter().zip(&w) {
                acc += pv * wv;
            }
            pw[i] = acc;
        }
        let cz: f64 = z2.iter().sum::<f64>() - z1.iter().sum::<f64>();
        let tterm = self.wt2 * cz;
        let mut out = Vec::with_capacity(2 * m);
        for i in 0..m {
            out.push(pw[i] + self.wu2[i] * z1[i] - tterm);
        }
        for i in 0..m {
            out.push(pw[i] + self.wv2[i] * z2[i] + tterm);
        }
        out
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        if let Some(red) = &self.reduced {
            let mut z = self.solve_once(red, rhs);
            let resid =
                refine(rhs, &mut z, |v| self.apply(v), |r| self.solve_once(red, r));
            if resid <= 1e-10 {
                return z;
            }
            let Some(l) = self.full_factor() else {
                return z;
            };
            let mut zf = rhs.to_vec();
            dense::chol_solve(l, &mut zf);
            refine(rhs, &mut zf, |v| self.apply(v), |r| {
                let mut d = r.to_vec();
                dense::chol_solve(l, &mut d);
                d
            });
            return zf;
        }
        let l = self.full_factor().expect("build ensured a usable factorization");
        let mut z = rhs.to_vec();
        dense::chol_solve(l, &mut z);
        refine(rhs, &mut z, |v| self.apply(v), |r| {
            let mut d = r.to_vec();
            dense::chol_solve(l, &mut d);
            d
        });
        z
    }
}

/// Iterative refinement: contracts the solve error as long as the factored
/// preconditioner is within a few digits of the true matrix. Returns the
/// final residual relative to the right-hand side so callers can tell
/// whether the preconditioner was adequate.
fn refine(
    rhs: &[f64],
    z: &mut [f64],
    apply: impl Fn(&[f64]) -> Vec<f64>,
    solve: impl Fn(&[f64]) -> Vec<f64>,
) -> f64 {
    let rn = rhs.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for _ in 0..4 {
        let az = apply(z);
        let res: Vec<f64> = rhs.iter().zip(&az).map(|(r, a)| r - a).collect();
        let worst = res.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if !worst.is_finite() || worst <= 1e-14 * (1.0 + rn) {
            return worst / (1.0 + rn);
        }
        let dz = solve(&res);
        for (zi, di) in z.iter_mut().zip(&dz) {
            *zi += di;
        }
    }
    let az = apply(z);
    let worst = rhs
        .iter()
        .zip(&az)
        .map(|(r, a)| (r - a).abs())
        .fold(0.0f64, f64::max);
    worst / (1.0 + rn)
}

/// Cholesky with a growing diagonal shift; duplicated or dependent rows make
/// the Schur matrix singular and land here.
fn factor_ladder(s: &Mat) -> Option<Mat> {
    let n = s.n;
    let scale = (0..n).fold(1.0f64, |m, i| m.max(s.at(i, i).abs()));
    let mut delta = 0.0f64;
    for _ in 0..4 {
        let mut f = s.clone();
        if delta > 0.0 {
            for i in 0..n {
                f.a[i * n + i] += delta;
            }
        }
        if dense::cholesky(&mut f).is_ok() {
            return Some(f);
        }
        delta = if delta == 0.0 { 1e-12 * scale } else { delta * 100.0 };
    }
    None
}

/// Schur matrix `S_ij = <A_i, W A_j W>` over the blocks below `block_limit`,
/// restricted to the given rows.
fn assemble_schur(rows: &[RowCoeffs], scalings: &[Scaling], block_limit: usize) -> Mat {
    let nrows = rows.len();
    let mut s = Mat::zeros(nrows);
    let mut tbuf: Vec<f64> = Vec::new();
    for (bi, sc) in scalings.iter().enumerate().take(block_limit) {
        let bi = bi as u32;
        match sc {
            Scaling::Psd { w, .. } => {
                let n = w.n;
                if tbuf.len() < n * n {
                    tbuf.resize(n * n, 0.0);
                }
                for i in 0..nrows {
                    if !fill_congruence(&mut tbuf[..n * n], w, &rows[i].psd, bi) {
                        continue;
                    }
                    for j in i..nrows {
                        let mut acc = 0.0;
                        for &(b, r, c, v) in &rows[j].psd {
                            if b != bi {
                                continue;
                            }
                            let (r, c) = (r as usize, c as usize);
                            acc += if r == c {
                                v * tbuf[r * n + r]
                            } else {
                                v * (tbuf[r * n + c] + tbuf[c * n + r])
                            };
                        }
                        s.a[i * nrows + j] += acc;
                    }
                }
            }
            Scaling::Lin { w2, .. } => {
                let mut buf = vec![0.0; w2.len()];
                for i in 0..nrows {
                    let mut any = false;
                    for &(b, k, v) in &rows[i].lin {
                        if b == bi {
                            buf[k as usize] += v * w2[k as usize];
                            any = true;
                        }
                    }
                    if !any {
                        continue;
                    }
                    for j in i..nrows {
                        let mut acc = 0.0;
                        for &(b, k, v) in &rows[j].lin {
                            if b == bi {
                                acc += v * buf[k as usize];
                            }
                        }
                        s.a[i * nrows + j] += acc;
                    }
                    for &(b, k, _) in &rows[i].lin {
                        if b == bi {
                            buf[k as usize] = 0.0;
                        }
                    }
                }
            }
        }
    }
    for r in 0..nrows {
        for c in r + 1..nrows {
            s.a[c * nrows + r] = s.a[r * nrows + c];
        }
    }
    s
}

/// Writes `W A W` into `t` for the sparse symmetric `A` held in `entries`
/// (restricted to block `bi`); returns false when the row has no entries on
/// this block.
fn fill_congruence(t: &mut [f64], w: &Mat, entries: &[(u32, u32, u32, f64)], bi: u32) -> bool {
    if !entries.iter().any(|e| e.0 == bi) {
        return false;
    }
    let n = w.n;
    t.fill(0.0);
    for &(b, r, c, v) in entries {
        if b != bi {
            continue;
        }
        let (r, c) = (r as usize, c as usize);
        let wr = w.row(r);
        let wc = w.row(c);
        if r == c {
            for p in 0..n {
                let coef = v * wr[p];
                if coef == 0.0 {
                    continue;
                }
                let trow = &mut t[p * n..(p + 1) * n];
                for (tv, &b1) in trow.iter_mut().zip(wc) {
                    *tv += coef * b1;
                }
            }
        } else {
            for p in 0..n {
                let c1 = v * wr[p];
                let c2 = v * wc[p];
                let trow = &mut t[p * n..(p + 1) * n];
                for ((tv, &b1), &b2) in trow.iter_mut().zip(wc).zip(wr) {
                    *tv += c1 * b1 + c2 * b2;
                }
            }
        }
    }
    true
}

fn build_schur(
    data: &ProblemData,
    scalings: &[Scaling],
    paired: &Option<PairedLayout>,
) -> Option<SchurSolver> {
    match paired {
        None => {
            let s = assemble_schur(&data.rows, scalings, scalings.len());
            let l = factor_ladder(&s)?;
            Some(SchurSolver::Generic { s, l })
        }
        Some(layout) => {
            let p = assemble_schur(&data.rows[..layout.pairs], scalings, layout.x_blocks);
            let take_w2 = |idx: usize| -> Vec<f64> {
                match &scalings[idx] {
                    Scaling::Lin { w2, .. } => w2.clone(),
                    Scaling::Psd { .. } => unreachable!("slack blocks are lin"),
                }
            };
            let wu2 = take_w2(layout.x_blocks);
            let wv2 = take_w2(layout.x_blocks + 1);
            let wt2 = take_w2(layout.x_blocks + 2)[0];
            PairedState::build(p, wu2, wv2, wt2).map(SchurSolver::Paired)
        }
    }
}

/// Builds the phase-1 relaxation of `<A_i, X> = b_i over blocks`: minimize
/// the bound `t` subject to `<A_i, X> + u_i - t = b_i` and
/// `<A_i, X> - v_i + t = b_i` with `u, v, t >= 0`. The returned start is
/// primal feasible, so the iteration only has to chase dual feasibility.
pub(super) fn phase1(
    blocks: &[BlockSpec],
    rows: &[RowCoeffs],
    b: &[f64],
) -> (ProblemData, (Vec<BVar>, Vec<f64>, Vec<BVar>), PairedLayout) {
    let m = rows.len();
    let nb = blocks.len();
    let (ub, vb, tb) = (nb as u32, nb as u32 + 1, nb as u32 + 2);

    let mut ext_blocks = blocks.to_vec();
    ext_blocks.push(BlockSpec::Nonneg(m));
    ext_blocks.push(BlockSpec::Nonneg(m));
    ext_blocks.push(BlockSpec::Nonneg(1));

    let ident: Vec<BVar> = blocks.iter().map(|sp| BVar::identity(sp, 1.0)).collect();
    let viol: Vec<f64> =
        (0..m).map(|i| b[i] - row_value(&rows[i], &ident, usize::MAX)).collect();
    let vmax = viol.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let t0 = 1.0 + 2.0 * vmax;

    let mut ext_rows = Vec::with_capacity(2 * m);
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        r.lin.push((ub, i as u32, 1.0));
        r.lin.push((tb, 0, -1.0));
        ext_rows.push(r);
    }
    for (i, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        r.lin.push((vb, i as u32, -1.0));
        r.lin.push((tb, 0, 1.0));
        ext_rows.push(r);
    }
    let ext_b: Vec<f64> = b.iter().chain(b.iter()).copied().collect();

    let mut c: Vec<BVar> = ext_blocks.iter().map(BVar::zeros).collect();
    c[tb as usize] = BVar::Lin(vec![1.0]);

    let mut x = ident;
    x.push(BVar::Lin(viol.iter().map(|&v| t0 + v).collect()));
    x.push(BVar::Lin(viol.iter().map(|&v| t0 - v).collect()));
    x.push(BVar::Lin(vec![t0]));
    let s: Vec<BVar> = ext_blocks.iter().map(|sp| BVar::identity(sp, 1.0)).collect();
    let y = vec![0.0; 2 * m];

    (
        ProblemData { blocks: ext_blocks, rows: ext_rows, b: ext_b, c },
        (x, y, s),
        PairedLayout { pairs: m, x_blocks: nb },
    )
}

pub(super) fn run(data: &ProblemData, cfg: &IpmConfig) -> Result<IpmOutcome, SdpError> {
    let m = data.rows.len();
    let nu: usize = data.blocks.iter().map(BlockSpec::order).sum();
    let bmax = data.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cmax = bvars_max_abs(&data.c);
    let amax = data.rows.iter().fold(0.0f64, |a, r| a.max(r.max_abs()));

    let (mut x, mut y, mut s) = cfg.start.clone().unwrap_or_else(|| {
        let kp = bmax.max(1.0);
        let kd = cmax.max(amax).max(1.0);
        (
            data.blocks.iter().map(|sp| BVar::identity(sp, kp)).collect(),
            vec![0.0; m],
            data.blocks.iter().map(|sp| BVar::identity(sp, kd)).collect(),
        )
    });

    let mut best: Option<Snapshot> = None;
    let mut stall = 0usize;
    let mut limit_hit = false;

    for iter in 0..=cfg.max_iters {
        let rp: Vec<f64> =
            (0..m).map(|i| data.b[i] - row_value(&data.rows[i], &x, usize::MAX)).collect();
        let mut rd: Vec<BVar> = data
            .c
            .iter()
            .zip(&s)
            .map(|(cb, sb)| {
                let mut t = cb.clone();
                t.add_scaled(sb, -1.0);
                t
            })
            .collect();
        add_adjoint(&mut rd, &data.rows, &y, -1.0);

        let obj = bvars_dot(&data.c, &x);
        let dobj: f64 = data.b.iter().zip(&y).map(|(a, b)| a * b).sum();
        let mu = bvars_dot(&x, &s) / nu as f64;
        let pinf = rp.iter().fold(0.0f64, |a, &v| a.max(v.abs())) / (1.0 + bmax);
        let dinf = bvars_max_abs(&rd) / (1.0 + cmax);
        let gap = (obj - dobj).abs() / (1.0 + obj.abs() + dobj.abs());
        if !(pinf.is_finite() && dinf.is_finite() && gap.is_finite() && mu.is_finite()) {
            if std::env::var_os("QCEM_IPM_TRACE").is_some() {
                eprintln!("break: residuals non-finite at iter {iter}");
            }
            break;
        }

        if std::env::var_os("QCEM_IPM_TRACE").is_some() {
            eprintln!(
                "iter {iter}: mu {mu:.3e} pinf {pinf:.3e} dinf {dinf:.3e} gap {gap:.3e} obj {obj:.6e} dobj {dobj:.6e}"
            );
        }
        let score = pinf.max(dinf).max(gap);
        if best.as_ref().map_or(true, |b| score < b.score) {
            best = Some(Snapshot {
                score,
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                objective: obj,
                dual_objective: dobj,
                pinf,
                dinf,
                gap,
            });
        }

        if let Some(ee) = &cfg.early_exit {
            let viol = (0..ee.rows)
                .map(|i| (row_value(&data.rows[i], &x, ee.x_blocks) - data.b[i]).abs())
                .fold(0.0f64, f64::max);
            if viol <= ee.threshold {
                return Ok(IpmOutcome {
                    status: IpmStatus::EarlyFeasible,
                    x,
                    y,
                    s,
                    objective: obj,
                    dual_objective: dobj,
                    pinf,
                    dinf,
                    gap,
                });
            }
            if let Some(floor) = ee.infeasible_above {
                if dinf <= CERTIFY_DINF && dobj > floor {
                    return Ok(IpmOutcome {
                        status: IpmStatus::CertifiedInfeasible,
                        x,
                        y,
                        s,
                        objective: obj,
                        dual_objective: dobj,
                        pinf,
                        dinf,
                        gap,
                    });
                }
            }
        }

        if pinf <= cfg.tol && dinf <= cfg.tol && gap <= cfg.tol {
            return Ok(IpmOutcome {
                status: IpmStatus::Converged,
                x,
                y,
                s,
                objective: obj,
                dual_objective: dobj,
                pinf,
                dinf,
                gap,
            });
        }

        if cfg.detect_farkas && iter >= 5 {
            let ymax = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if ymax > 1e7 * (1.0 + bmax) {
                let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                let yh: Vec<f64> = y.iter().map(|v| v / ynorm).collect();
                let mut z: Vec<BVar> = data.blocks.iter().map(BVar::zeros).collect();
                add_adjoint(&mut z, &data.rows, &yh, 1.0);
                let mut top = f64::NEG_INFINITY;
                for zb in &z {
                    top = top.max(match zb {
                        BVar::Psd(zm) => {
                            let (vals, _) = dense::eig_sym(zm, false);
                            *vals.last().unwrap_or(&0.0)
                        }
                        BVar::Lin(zv) => zv.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v)),
                    });
                }
                let bdot: f64 = data.b.iter().zip(&yh).map(|(a, b)| a * b).sum();
                if top <= 1e-10 * (1.0 + amax) && bdot >= 1e-4 {
                    return Ok(IpmOutcome {
                        status: IpmStatus::FarkasInfeasible,
                        x,
                        y,
                        s,
                        objective: obj,
                        dual_objective: dobj,
                        pinf,
                        dinf,
                        gap,
                    });
                }
            }
        }

        if iter == cfg.max_iters {
            limit_hit = true;
            break;
        }

        let scalings: Option<Vec<Scaling>> =
            x.iter().zip(&s).map(|(xb, sb)| nt_scaling(xb, sb)).collect();
        let Some(scalings) = scalings else {
            if std::env::var_os("QCEM_IPM_TRACE").is_some() {
                eprintln!("break: nt_scaling failed at iter {iter}");
            }
            break;
        };
        let Some(solver) = build_schur(data, &scalings, &cfg.paired) else {
            if std::env::var_os("QCEM_IPM_TRACE").is_some() {
                eprintln!("break: schur factor failed at iter {iter}");
            }
            break;
        };

        let wrw: Vec<BVar> = scalings.iter().zip(&rd).map(|(sc, r)| scaled_wrw(sc, r)).collect();

        // affine predictor; its target makes r g r^T equal to -x exactly,
        // so the right-hand side only needs -x - w rd w
        let y_aff: Vec<BVar> = wrw
            .iter()
            .zip(&x)
            .map(|(w, xb)| {
                let mut t = w.clone();
                t.add_scaled(w, -2.0);
                t.add_scaled(xb, -1.0);
                t
            })
            .collect();
        let rhs_aff: Vec<f64> =
            (0..m).map(|i| rp[i] - row_value(&data.rows[i], &y_aff, usize::MAX)).collect();
        let dy_a = solver.solve(&rhs_aff);
        let mut ds_a = rd.clone();
        add_adjoint(&mut ds_a, &data.rows, &dy_a, -1.0);
        let dsh_a: Vec<BVar> =
            scalings.iter().zip(&ds_a).map(|(sc, v)| scale_dual(sc, v)).collect();
        let dxh_a: Vec<BVar> = scalings
            .iter()
            .zip(&dsh_a)
            .map(|(sc, dsh)| {
                let mut g = g_affine(sc);
                g.add_scaled(dsh, -1.0);
                g
            })
            .collect();

        let ap_a = scalings
            .iter()
            .zip(&dxh_a)
            .map(|(sc, dh)| step_to_boundary(sc, dh))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let ad_a = scalings
            .iter()
            .zip(&dsh_a)
            .map(|(sc, dh)| step_to_boundary(sc, dh))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);

        let xs = mu * nu as f64;
        let dxs: f64 = scalings.iter().zip(&dxh_a).map(|(sc, dh)| diag_dot(sc, dh)).sum();
        let xds: f64 = scalings.iter().zip(&dsh_a).map(|(sc, dh)| diag_dot(sc, dh)).sum();
        let dxds: f64 = dxh_a.iter().zip(&dsh_a).map(|(a, b)| a.dot(b)).sum();
        let mu_aff = (xs + ap_a * dxs + ad_a * xds + ap_a * ad_a * dxds) / nu as f64;
        let sigma = ((mu_aff / mu).max(0.0).powi(3)).clamp(1e-8, 1.0);

        let sigma_mu = sigma * mu;
        let g_c: Vec<BVar> = scalings
            .iter()
            .zip(dxh_a.iter().zip(&dsh_a))
            .map(|(sc, (a, b))| corrector_g(sc, a, b, sigma_mu))
            .collect();
        let y_c: Vec<BVar> = scalings
            .iter()
            .zip(g_c.iter().zip(&wrw))
            .map(|(sc, (g, w))| {
                let mut t = unscale_primal(sc, g);
                t.add_scaled(w, -1.0);
                t
            })
            .collect();
        let rhs_c: Vec<f64> =
            (0..m).map(|i| rp[i] - row_value(&data.rows[i], &y_c, usize::MAX)).collect();
        let dy = solver.solve(&rhs_c);
        let mut ds = rd.clone();
        add_adjoint(&mut ds, &data.rows, &dy, -1.0);
        let dsh: Vec<BVar> = scalings.iter().zip(&ds).map(|(sc, v)| scale_dual(sc, v)).collect();
        let dxh: Vec<BVar> = g_c
            .iter()
            .zip(&dsh)
            .map(|(g, d)| {
                let mut t = g.clone();
                t.add_scaled(d, -1.0);
                t
            })
            .collect();
        let dx: Vec<BVar> =
            scalings.iter().zip(&dxh).map(|(sc, dh)| unscale_primal(sc, dh)).collect();

        let ap = scalings
            .iter()
            .zip(&dxh)
            .map(|(sc, dh)| step_to_boundary(sc, dh))
            .fold(f64::INFINITY, f64::min);
        let ad = scalings
            .iter()
            .zip(&dsh)
            .map(|(sc, dh)| step_to_boundary(sc, dh))
            .fold(f64::INFINITY, f64::min);
        let ap = (STEP_DAMP * ap).min(1.0);
        let ad = (STEP_DAMP * ad).min(1.0);

        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
            if stall >= 3 {
                if std::env::var_os("QCEM_IPM_TRACE").is_some() {
                    eprintln!("break: stalled at iter {iter}");
                }
                break;
            }
        } else {
            stall = 0;
        }

        for (xb, dxb) in x.iter_mut().zip(&dx) {
            xb.add_scaled(dxb, ap);
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        for (sb, dsb) in s.iter_mut().zip(&ds) {
            sb.add_scaled(dsb, ad);
        }
        for xb in x.iter_mut().chain(s.iter_mut()) {
            if let BVar::Psd(mm) = xb {
                mm.symmetrize();
            }
        }
        if !(x.iter().all(BVar::all_finite)
            && s.iter().all(BVar::all_finite)
            && y.iter().all(|v| v.is_finite()))
        {
            if std::env::var_os("QCEM_IPM_TRACE").is_some() {
                eprintln!("break: iterate non-finite at iter {iter}");
            }
            break;
        }
    }

    let Some(snap) = best else {
        return Err(SdpError::NumericalBreakdown {
            context: "no usable iterate produced".to_string(),
        });
    };
    Ok(IpmOutcome {
        status: if limit_hit { IpmStatus::IterationLimit } else { IpmStatus::Stalled },
        x: snap.x,
        y: snap.y,
        s: snap.s,
        objective: snap.objective,
        dual_objective: snap.dual_objective,
        pinf: snap.pinf,
        dinf: snap.dinf,
        gap: snap.gap,
    })
}
