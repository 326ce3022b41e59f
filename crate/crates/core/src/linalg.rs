//! Dense complex matrices and the Hermitian toolkit the rest of the crate
//! stands on.
//!
//! The substrate is [`ComplexMatrix`], a row-major dense matrix over
//! `Complex64`. Rectangular shapes are allowed (Kraus operators and
//! isometries map between spaces of different dimension), but everything
//! spectral requires a square Hermitian input and says so in its contract.
//!
//! Tensor-product structure is handled positionally: an operator on
//! `H_0 (x) H_1 (x) ... (x) H_{k-1}` with local dimensions `dims` is stored
//! with system 0 most significant, i.e. the flat index of `(i_0, ..,
//! i_{k-1})` is `((i_0 * d_1 + i_1) * d_2 + ...)`. [`kron`],
//! [`partial_trace`], [`partial_transpose`], and [`permute_systems`] all
//! follow this convention.
//!
//! The eigensolver is the classical dense path: unitary Householder
//! reduction of a Hermitian matrix to real symmetric tridiagonal form,
//! followed by the implicit-shift QL iteration with accumulated rotations.
//! For the dimensions used here (up to a few hundred) reconstruction error
//! stays well inside [`crate::tol::EPS_EIG`]; tests enforce that.
//!
//! Support conventions: spectral functions with a singularity at zero
//! (`log2`, negative powers) are applied only on the support, where the
//! support is the span of eigenvectors with eigenvalue above
//! [`crate::tol::EPS_SUPP`] relative to the largest eigenvalue. Off-support
//! directions map to zero. This is the pseudo-inverse convention throughout.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};
use thiserror::Error;

use crate::tol;

/// Errors from dense linear algebra.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// Input was supposed to be Hermitian but is not, beyond tolerance.
    #[error("matrix is not Hermitian: max |M - M^dag| entry = {residual:.3e}")]
    NotHermitian { residual: f64 },
    /// A spectral function requiring positive semidefiniteness met an
    /// eigenvalue below `-EPS_PSD`.
    #[error("matrix has disallowed negative eigenvalue {min_eigenvalue:.6e}")]
    NegativeEigenvalue { min_eigenvalue: f64 },
    /// Shapes do not line up for the requested operation.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    /// Direct-sum embedding must not lose dimensions.
    #[error("direct-sum embedding cannot shrink dimension {from} to {to}")]
    ShrinkNotAllowed { from: usize, to: usize },
    /// QL iteration failed to deflate a subdiagonal entry.
    #[error("eigensolver failed to converge within {iters} sweeps")]
    NoConvergence { iters: usize },
}

fn dim_err(context: String) -> LinalgError {
    LinalgError::DimensionMismatch { context }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    /// All-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    /// Identity of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Dimension of a square matrix. Panics on rectangular input; square
    /// shape is a precondition everywhere this is used.
    pub fn dim(&self) -> usize {
        assert!(self.is_square(), "dim() on a {}x{} matrix", self.rows, self.cols);
        self.rows
    }

    /// Raw row-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Matrix product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "mul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        let data = self.data.iter().map(|a| a.conj()).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a rectangular matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude; the norm used for residual reporting.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry, `max |M - M^dag|`.
    pub fn herm_residual(&self) -> f64 {
        assert!(self.is_square(), "herm_residual of a rectangular matrix");
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, eps: f64) -> bool {
        self.is_square() && self.herm_residual() <= eps
    }

    /// Hermitian part `(M + M^dag)/2`.
    pub fn hermitize(&self) -> Self {
        self.add(&self.adjoint()).scale(0.5)
    }

    /// Real part of `Tr[self^dag other]`; the Hilbert-Schmidt pairing used
    /// when both arguments are Hermitian.
    pub fn inner_re(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "inner shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Kronecker product. System order matches the flat-index convention:
/// `kron(a, b)` puts `a`'s system first (most significant).
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let av = a[(ar, ac)];
            if av.re == 0.0 && av.im == 0.0 {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = av * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Flat offsets of every multi-index over `dims` restricted to `systems`,
/// with the other digits zero. Adding one offset per disjoint system group
/// reassembles a full flat index.
fn system_offsets(dims: &[usize], systems: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut offsets = vec![0usize];
    for &s in systems {
        let mut next = Vec::with_capacity(offsets.len() * dims[s]);
        for &base in &offsets {
            for digit in 0..dims[s] {
                next.push(base + digit * strides[s]);
            }
        }
        offsets = next;
    }
    offsets
}

/// Traces out every tensor factor not listed in `keep`; `keep` must be
/// strictly increasing. The result keeps the surviving systems in their
/// original relative order.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.dim() != total {
        return Err(dim_err(format!(
            "partial_trace: matrix is {}x{} but dims {:?} give {}",
            m.rows(),
            m.cols(),
            dims,
            total
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&s| s >= dims.len()) {
        return Err(dim_err(format!(
            "partial_trace: keep list {:?} invalid for {} systems",
            keep,
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !keep.contains(s)).collect();
    let kept_off = system_offsets(dims, keep);
    let traced_off = system_offsets(dims, &traced);
    let out_dim: usize = keep.iter().map(|&s| dims[s]).product();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for (ri, &ro) in kept_off.iter().enumerate() {
        for (ci, &co) in kept_off.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &to in &traced_off {
                acc += m[(ro + to, co + to)];
            }
            out[(ri, ci)] = acc;
        }
    }
    Ok(out)
}

/// Transposes a single tensor factor in place of the identity on the rest.
pub fn partial_transpose(
    m: &ComplexMatrix,
    dims: &[usize],
    system: usize,
) -> Result<ComplexMatrix, LinalgError> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.dim() != total {
        return Err(dim_err(format!(
            "partial_transpose: matrix is {}x{} but dims {:?} give {}",
            m.rows(),
            m.cols(),
            dims,
            total
        )));
    }
    if system >= dims.len() {
        return Err(dim_err(format!(
            "partial_transpose: system {} out of range for {} systems",
            system,
            dims.len()
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|&s| s != system).collect();
    let rest_off = system_offsets(dims, &rest);
    let sys_off = system_offsets(dims, &[system]);
    let mut out = ComplexMatrix::zeros(total, total);
    for &ro in &rest_off {
        for &co in &rest_off {
            for &sa in &sys_off {
                for &sb in &sys_off {
                    out[(ro + sb, co + sa)] = m[(ro + sa, co + sb)];
                }
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors. `perm[i]` names the old system that lands in
/// slot `i` of the result, so `permute_systems(kron(a, b), &[da, db], &[1,
/// 0])` equals `kron(b, a)`.
pub fn permute_systems(
    m: &ComplexMatrix,
    dims: &[usize],
    perm: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.dim() != total {
        return Err(dim_err(format!(
            "permute_systems: matrix is {}x{} but dims {:?} give {}",
            m.rows(),
            m.cols(),
            dims,
            total
        )));
    }
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(dim_err(format!("permute_systems: {:?} is not a permutation", perm)));
    }

    let mut old_strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        old_strides[i] = old_strides[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut new_strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        new_strides[i] = new_strides[i + 1] * new_dims[i + 1];
    }
    // map[old_flat] = new_flat
    let mut map = vec![0usize; total];
    for (old, slot) in map.iter_mut().enumerate() {
        let mut acc = 0usize;
        for (i, &p) in perm.iter().enumerate() {
            let digit = (old / old_strides[p]) % dims[p];
            acc += digit * new_strides[i];
        }
        *slot = acc;
    }
    let mut out = ComplexMatrix::zeros(total, total);
    for r in 0..total {
        for c in 0..total {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Pads a square matrix with zero rows and columns up to `new_dim`,
/// realizing the direct-sum embedding into a larger space.
pub fn embed_direct_sum(m: &ComplexMatrix, new_dim: usize) -> Result<ComplexMatrix, LinalgError> {
    let d = m.dim();
    if new_dim < d {
        return Err(LinalgError::ShrinkNotAllowed { from: d, to: new_dim });
    }
    let mut out = ComplexMatrix::zeros(new_dim, new_dim);
    for r in 0..d {
        for c in 0..d {
            out[(r, c)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues sorted in
/// decreasing order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Eigenvalues, decreasing.
    pub values: Vec<f64>,
    /// Unitary matrix whose column `j` is the eigenvector of `values[j]`.
    pub vectors: ComplexMatrix,
}

impl Spectrum {
    /// Rebuilds `U diag(f(lambda)) U^dag` for arbitrary per-eigenvalue
    /// values `f`.
    pub fn assemble(&self, mapped: &[f64]) -> ComplexMatrix {
        let n = self.vectors.rows();
        assert_eq!(mapped.len(), n, "assemble length mismatch");
        let mut out = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let lv = mapped[j];
            if lv == 0.0 {
                continue;
            }
            for r in 0..n {
                let ur = self.vectors[(r, j)];
                if ur.re == 0.0 && ur.im == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += ur * self.vectors[(c, j)].conj() * lv;
                }
            }
        }
        out
    }

    /// `U diag(lambda) U^dag`, the reconstruction of the original matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.assemble(&self.values)
    }

    /// Eigenvalue cutoff separating support from kernel: relative to the
    /// largest eigenvalue, floored at a tiny absolute scale.
    pub fn support_cutoff(&self) -> f64 {
        let lam_max = self.values.first().copied().unwrap_or(0.0).max(0.0);
        (lam_max * tol::EPS_SUPP).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues above the support cutoff.
    pub fn support_rank(&self) -> usize {
        let cut = self.support_cutoff();
        self.values.iter().filter(|&&v| v > cut).count()
    }

    /// Projector onto the support.
    pub fn support_projector(&self) -> ComplexMatrix {
        let cut = self.support_cutoff();
        let mapped: Vec<f64> = self.values.iter().map(|&v| if v > cut { 1.0 } else { 0.0 }).collect();
        self.assemble(&mapped)
    }
}

/// Householder reduction of Hermitian `a` (destroyed) to tridiagonal form.
/// Returns `(d, e, p)`: diagonal, real subdiagonal (`e[k]` couples `k` and
/// `k+1`, last entry zero), and the accumulated unitary with `a = p T p^dag`.
fn tridiagonalize(mut a: ComplexMatrix) -> (Vec<f64>, Vec<f64>, ComplexMatrix) {
    let n = a.dim();
    let mut p = ComplexMatrix::identity(n);

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut xnorm2 = 0.0;
        for i in 0..m {
            xnorm2 += a[(k + 1 + i, k)].norm_sqr();
        }
        let xnorm = xnorm2.sqrt();
        if xnorm <= f64::MIN_POSITIVE.sqrt() {
            continue;
        }
        let alpha = a[(k + 1, k)];
        let phase = if alpha.norm() > 0.0 { alpha / alpha.norm() } else { Complex64::new(1.0, 0.0) };
        let beta = -phase * xnorm;
        // v = x - beta e0; the sign choice above makes v[0] cancellation-free
        let mut v: Vec<Complex64> = (0..m).map(|i| a[(k + 1 + i, k)]).collect();
        v[0] -= beta;
        let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vv <= f64::MIN_POSITIVE {
            continue;
        }
        let tau = 2.0 / vv;

        // Hermitian rank-2 update of the trailing block B <- B - v w^dag - w v^dag
        let mut pv = vec![Complex64::new(0.0, 0.0); m];
        for (i, pvi) in pv.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, vj) in v.iter().enumerate() {
                acc += a[(k + 1 + i, k + 1 + j)] * vj;
            }
            *pvi = acc * tau;
        }
        let kappa: f64 = 0.5 * tau * v.iter().zip(&pv).map(|(vi, pi)| (vi.conj() * pi).re).sum::<f64>();
        let w: Vec<Complex64> = pv.iter().zip(&v).map(|(pi, vi)| pi - vi * kappa).collect();
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[(k + 1 + i, k + 1 + j)] -= upd;
            }
        }
        a[(k + 1, k)] = beta;
        a[(k, k + 1)] = beta.conj();
        for i in 1..m {
            a[(k + 1 + i, k)] = Complex64::new(0.0, 0.0);
            a[(k, k + 1 + i)] = Complex64::new(0.0, 0.0);
        }

        // accumulate P <- P H_k on columns k+1..
        for r in 0..n {
            let mut q = Complex64::new(0.0, 0.0);
            for (j, vj) in v.iter().enumerate() {
                q += p[(r, k + 1 + j)] * vj;
            }
            q *= tau;
            for (j, vj) in v.iter().enumerate() {
                let upd = q * vj.conj();
                p[(r, k + 1 + j)] -= upd;
            }
        }
    }

    // Phase-fold complex subdiagonal entries to real nonnegative ones.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut s = Complex64::new(1.0, 0.0);
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    for i in 0..n {
        d[i] = a[(i, i)].re;
        phases[i] = s;
        if i + 1 < n {
            // subdiagonal after conjugation by diag(phases) is
            // conj(s_{i+1}) * beta_i * s_i; choosing s_{i+1} along
            // beta_i * s_i makes it real nonnegative
            let w = a[(i + 1, i)] * s;
            let mag = w.norm();
            e[i] = mag;
            if mag > 0.0 {
                s = w / mag;
            }
        }
    }
    for (j, ph) in phases.iter().enumerate() {
        if (ph - Complex64::new(1.0, 0.0)).norm() == 0.0 {
            continue;
        }
        for r in 0..n {
            let v = p[(r, j)] * ph;
            p[(r, j)] = v;
        }
    }
    (d, e, p)
}

/// Implicit-shift QL iteration on a real symmetric tridiagonal matrix,
/// rotating the columns of `z` along. `d` and `e` follow the convention of
/// [`tridiagonalize`].
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut ComplexMatrix) -> Result<(), LinalgError> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() < 1e-300 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LinalgError::NoConvergence { iters: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(if g == 0.0 { 1.0 } else { g }));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..z.rows() {
                    let zi = z[(row, i)];
                    let zi1 = z[(row, i + 1)];
                    z[(row, i + 1)] = zi * s + zi1 * c;
                    z[(row, i)] = zi * c - zi1 * s;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian within [`tol::EPS_HERM`]; it is symmetrized
/// before factorization so the tiny antisymmetric part cannot leak into the
/// result. Eigenvalues come back sorted in decreasing order.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Spectrum, LinalgError> {
    if !m.is_square() {
        return Err(dim_err(format!("eig_hermitian on a {}x{} matrix", m.rows(), m.cols())));
    }
    let residual = m.herm_residual();
    if residual > tol::EPS_HERM {
        return Err(LinalgError::NotHermitian { residual });
    }
    let n = m.dim();
    if n == 0 {
        return Ok(Spectrum { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let a = m.hermitize();
    let (mut d, mut e, mut p) = tridiagonalize(a);
    tql2(&mut d, &mut e, &mut p)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("eigenvalues are finite"));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new_col)] = p[(r, old_col)];
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Spectral functions applied through [`hermitian_function`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFunction {
    /// Base-2 logarithm on the support, zero elsewhere.
    Log2,
    /// Real power. Negative or non-integer powers require a PSD input;
    /// negative powers act only on the support. `Power(0.0)` yields the
    /// support projector.
    Power(f64),
    /// Inverse square root on the support (pseudo-inverse convention).
    PinvSqrt,
    /// Inverse on the support (pseudo-inverse convention).
    Pinv,
}

/// Applies a scalar function to a Hermitian matrix through its spectrum,
/// with the crate's support conventions for singular functions.
pub fn hermitian_function(
    m: &ComplexMatrix,
    f: MatrixFunction,
) -> Result<ComplexMatrix, LinalgError> {
    let spec = eig_hermitian(m)?;
    let needs_psd = match f {
        MatrixFunction::Log2 | MatrixFunction::PinvSqrt | MatrixFunction::Pinv => true,
        MatrixFunction::Power(p) => p < 0.0 || p.fract() != 0.0,
    };
    let min_eig = spec.values.last().copied().unwrap_or(0.0);
    if needs_psd && min_eig < -tol::EPS_PSD {
        return Err(LinalgError::NegativeEigenvalue { min_eigenvalue: min_eig });
    }
    let cut = spec.support_cutoff();
    let mapped: Vec<f64> = spec
        .values
        .iter()
        .map(|&lam| {
            let lam_pos = lam.max(0.0);
            match f {
                MatrixFunction::Log2 => {
                    if lam_pos > cut {
                        lam_pos.log2()
                    } else {
                        0.0
                    }
                }
                MatrixFunction::PinvSqrt => {
                    if lam_pos > cut {
                        1.0 / lam_pos.sqrt()
                    } else {
                        0.0
                    }
                }
                MatrixFunction::Pinv => {
                    if lam_pos > cut {
                        1.0 / lam_pos
                    } else {
                        0.0
                    }
                }
                MatrixFunction::Power(p) => {
                    if p < 0.0 || p == 0.0 {
                        if lam_pos > cut {
                            lam_pos.powf(p)
                        } else {
                            0.0
                        }
                    } else if p.fract() == 0.0 && !needs_psd {
                        lam.powi(p as i32)
                    } else {
                        lam_pos.powf(p)
                    }
                }
            }
        })
        .collect();
    Ok(spec.assemble(&mapped))
}

/// The standard Hermitian basis of the `d x d` matrices: diagonal units,
/// symmetric pair sums, and antisymmetric pair differences times `i`.
pub(crate) fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in p..d {
            if p == q {
                basis.push(unit_matrix(d, p, p, Complex64::new(1.0, 0.0)));
            } else {
                let mut sym = unit_matrix(d, p, q, Complex64::new(1.0, 0.0));
                sym[(q, p)] = Complex64::new(1.0, 0.0);
                basis.push(sym);
                let mut skew = unit_matrix(d, p, q, Complex64::new(0.0, 1.0));
                skew[(q, p)] = Complex64::new(0.0, -1.0);
                basis.push(skew);
            }
        }
    }
    basis
}

/// Basis of the real symmetric `d x d` matrices: diagonal units and pair sums.
pub(crate) fn symmetric_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(d * (d + 1) / 2);
    for p in 0..d {
        for q in p..d {
            if p == q {
                basis.push(unit_matrix(d, p, p, Complex64::new(1.0, 0.0)));
            } else {
                let mut sym = unit_matrix(d, p, q, Complex64::new(1.0, 0.0));
                sym[(q, p)] = Complex64::new(1.0, 0.0);
                basis.push(sym);
            }
        }
    }
    basis
}

/// Basis of the real antisymmetric `d x d` matrices: pair differences.
pub(crate) fn antisymmetric_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for p in 0..d {
        for q in (p + 1)..d {
            let mut skew = unit_matrix(d, p, q, Complex64::new(1.0, 0.0));
            skew[(q, p)] = Complex64::new(-1.0, 0.0);
            basis.push(skew);
        }
    }
    basis
}

fn unit_matrix(d: usize, r: usize, c: usize, v: Complex64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(r, c)] = v;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_complex(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian())
    }

    fn random_hermitian(rng: &mut Rng, n: usize) -> ComplexMatrix {
        random_complex(rng, n, n).hermitize()
    }

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, eps: f64, what: &str) {
        let d = a.sub(b).max_abs();
        assert!(d <= eps, "{what}: max deviation {d:.3e} > {eps:.1e}");
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = Rng::new(2024, 0);
        for &n in &[1usize, 2, 3, 4, 6, 9, 16] {
            let m = random_hermitian(&mut rng, n);
            let spec = eig_hermitian(&m).unwrap();
            assert_close(&spec.reconstruct(), &m, 1e-10, "reconstruction");
            let gram = spec.vectors.adjoint().mul(&spec.vectors);
            assert_close(&gram, &ComplexMatrix::identity(n), 1e-10, "orthonormality");
            for w in spec.values.windows(2) {
                assert!(w[0] >= w[1], "eigenvalues not sorted: {:?}", spec.values);
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_spectra() {
        // diag(3,1,1,0) conjugated by a random unitary keeps its spectrum
        let mut rng = Rng::new(7, 1);
        let g = random_complex(&mut rng, 4, 4);
        let spec_g = eig_hermitian(&g.hermitize()).unwrap();
        let u = spec_g.vectors; // unitary from an unrelated decomposition
        let lam = ComplexMatrix::from_diag(&[3.0, 1.0, 1.0, 0.0]);
        let m = u.mul(&lam).mul(&u.adjoint());
        let spec = eig_hermitian(&m).unwrap();
        let expect = [3.0, 1.0, 1.0, 0.0];
        for (got, want) in spec.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-10, "eigenvalue {got} vs {want}");
        }
        assert_close(&spec.reconstruct(), &m, 1e-10, "degenerate reconstruction");
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(3);
        m[(0, 1)] = Complex64::new(0.5, 0.0);
        match eig_hermitian(&m) {
            Err(LinalgError::NotHermitian { residual }) => {
                assert!((residual - 0.5).abs() < 1e-15)
            }
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn kron_is_multiplicative() {
        // (A (x) B)(C (x) D) = AC (x) BD, the defining algebra of kron
        let mut rng = Rng::new(5, 2);
        let a = random_complex(&mut rng, 2, 3);
        let b = random_complex(&mut rng, 3, 2);
        let c = random_complex(&mut rng, 3, 2);
        let d = random_complex(&mut rng, 2, 4);
        let lhs = kron(&a, &b).mul(&kron(&c, &d));
        let rhs = kron(&a.mul(&c), &b.mul(&d));
        assert_close(&lhs, &rhs, 1e-12, "kron multiplicativity");
    }

    #[test]
    fn partial_trace_matches_brute_force() {
        let dims = [2usize, 3, 2];
        let total: usize = dims.iter().product();
        let mut rng = Rng::new(9, 3);
        let m = random_complex(&mut rng, total, total);

        // brute force: decompose indices digit by digit
        let digits = |flat: usize| -> [usize; 3] {
            [flat / 6, (flat / 2) % 3, flat % 2]
        };
        let keep = [0usize, 2];
        let out = partial_trace(&m, &dims, &keep).unwrap();
        assert_eq!(out.dim(), 4);
        let mut brute = ComplexMatrix::zeros(4, 4);
        for r in 0..total {
            for c in 0..total {
                let dr = digits(r);
                let dc = digits(c);
                if dr[1] == dc[1] {
                    let or = dr[0] * 2 + dr[2];
                    let oc = dc[0] * 2 + dc[2];
                    brute[(or, oc)] += m[(r, c)];
                }
            }
        }
        assert_close(&out, &brute, 1e-12, "partial trace brute force");
    }

    #[test]
    fn partial_trace_on_products_factorizes() {
        let mut rng = Rng::new(13, 4);
        let a = random_complex(&mut rng, 3, 3);
        let b = random_complex(&mut rng, 4, 4);
        let m = kron(&a, &b);
        let ta = partial_trace(&m, &[3, 4], &[0]).unwrap();
        let tb = partial_trace(&m, &[3, 4], &[1]).unwrap();
        assert_close(&ta, &a.scale_c(b.trace()), 1e-12, "trace out B");
        assert_close(&tb, &b.scale_c(a.trace()), 1e-12, "trace out A");
        let full = partial_trace(&m, &[3, 4], &[]).unwrap();
        assert!((full[(0, 0)] - a.trace() * b.trace()).norm() < 1e-12);
    }

    #[test]
    fn permute_systems_swaps_kron_factors() {
        let mut rng = Rng::new(21, 5);
        let a = random_complex(&mut rng, 2, 2);
        let b = random_complex(&mut rng, 3, 3);
        let c = random_complex(&mut rng, 2, 2);
        let m = kron(&kron(&a, &b), &c);
        let swapped = permute_systems(&m, &[2, 3, 2], &[2, 0, 1]).unwrap();
        let expect = kron(&kron(&c, &a), &b);
        assert_close(&swapped, &expect, 1e-12, "permute [2,0,1]");
    }

    #[test]
    fn partial_transpose_acts_on_one_factor() {
        let mut rng = Rng::new(23, 6);
        let a = random_complex(&mut rng, 2, 2);
        let b = random_complex(&mut rng, 3, 3);
        let m = kron(&a, &b);
        let pt = partial_transpose(&m, &[2, 3], 1).unwrap();
        assert_close(&pt, &kron(&a, &b.transpose()), 1e-12, "partial transpose on B");
        let ptpt = partial_transpose(&pt, &[2, 3], 1).unwrap();
        assert_close(&ptpt, &m, 1e-12, "partial transpose is an involution");
    }

    #[test]
    fn embedding_pads_spectrum_with_zeros() {
        let mut rng = Rng::new(31, 7);
        let m = random_hermitian(&mut rng, 3);
        let e = embed_direct_sum(&m, 5).unwrap();
        let sm = eig_hermitian(&m).unwrap().values;
        let se = eig_hermitian(&e).unwrap().values;
        // padded spectrum = original plus two zeros, as multisets
        let mut want = sm.clone();
        want.extend_from_slice(&[0.0, 0.0]);
        want.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (got, want) in se.iter().zip(want) {
            assert!((got - want).abs() < 1e-10, "embedded eigenvalue {got} vs {want}");
        }
        assert!(matches!(
            embed_direct_sum(&m, 2),
            Err(LinalgError::ShrinkNotAllowed { from: 3, to: 2 })
        ));
    }

    #[test]
    fn pinv_times_matrix_is_support_projector() {
        // hermitian_function(M, power(1)) * hermitian_function(M, pinv)
        // must equal the support projector, including rank-deficient M
        let mut rng = Rng::new(37, 8);
        let g = random_complex(&mut rng, 4, 2);
        let m = g.mul(&g.adjoint()); // rank 2 PSD in dimension 4
        let m1 = hermitian_function(&m, MatrixFunction::Power(1.0)).unwrap();
        let mp = hermitian_function(&m, MatrixFunction::Pinv).unwrap();
        let proj = hermitian_function(&m, MatrixFunction::Power(0.0)).unwrap();
        assert_close(&m1.mul(&mp), &proj, 1e-9, "M * pinv(M) = support projector");
        assert_close(&proj.mul(&proj), &proj, 1e-9, "projector idempotent");
        let spec = eig_hermitian(&m).unwrap();
        assert_eq!(spec.support_rank(), 2);
    }

    #[test]
    fn pinv_sqrt_squares_to_pinv() {
        let mut rng = Rng::new(41, 9);
        let g = random_complex(&mut rng, 5, 3);
        let m = g.mul(&g.adjoint());
        let ps = hermitian_function(&m, MatrixFunction::PinvSqrt).unwrap();
        let pi = hermitian_function(&m, MatrixFunction::Pinv).unwrap();
        assert_close(&ps.mul(&ps), &pi, 1e-8, "pinv_sqrt^2 = pinv");
    }

    #[test]
    fn log2_of_diagonal_is_entrywise() {
        let m = ComplexMatrix::from_diag(&[4.0, 1.0, 0.25]);
        let l = hermitian_function(&m, MatrixFunction::Log2).unwrap();
        let want = ComplexMatrix::from_diag(&[2.0, 0.0, -2.0]);
        assert_close(&l, &want, 1e-12, "log2 diagonal");
    }

    #[test]
    fn power_two_matches_square() {
        let mut rng = Rng::new(43, 10);
        let m = random_hermitian(&mut rng, 4);
        let p2 = hermitian_function(&m, MatrixFunction::Power(2.0)).unwrap();
        assert_close(&p2, &m.mul(&m), 1e-10, "power(2) = M^2");
    }

    #[test]
    fn negative_power_requires_psd() {
        let m = ComplexMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            hermitian_function(&m, MatrixFunction::Pinv),
            Err(LinalgError::NegativeEigenvalue { .. })
        ));
    }
}
