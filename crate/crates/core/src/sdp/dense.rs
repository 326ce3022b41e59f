//! Real symmetric dense kernel for the interior-point solver: square
//! matrices, blocked Cholesky, and a symmetric eigensolver.
//!
//! This is deliberately separate from [`crate::linalg`]: the solver works
//! over real symmetric blocks (complex data arrives pre-embedded), its
//! matrices are hot-path objects, and nothing here needs the tensor-product
//! machinery. Keeping the kernel standalone also keeps the solver's
//! numerical behavior self-contained and easy to audit.

/// Square dense row-major `f64` matrix.
#[derive(Clone, Debug)]
pub(crate) struct Mat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.n + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * self.n + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.n..(r + 1) * self.n]
    }

    /// Symmetrizes in place; cheap guard against drift in chained products.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for r in 0..n {
            for c in r + 1..n {
                let v = 0.5 * (self.a[r * n + c] + self.a[c * n + r]);
                self.a[r * n + c] = v;
                self.a[c * n + r] = v;
            }
        }
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut t = Mat::zeros(n);
        for r in 0..n {
            for c in 0..n {
                t.a[c * n + r] = self.a[r * n + c];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Mat) -> f64 {
        self.a.iter().zip(&other.a).map(|(x, y)| x * y).sum()
    }

    pub fn add_scaled(&mut self, other: &Mat, s: f64) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += s * y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.a {
            *x *= s;
        }
    }
}

/// `C = A * B` for square matrices, ikj order so the inner loop runs along
/// contiguous rows.
pub(crate) fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.n;
    debug_assert_eq!(b.n, n);
    let mut c = Mat::zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a.a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.a[k * n..(k + 1) * n];
            let crow = &mut c.a[i * n..(i + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
    c
}

/// `R V R^T`.
pub(crate) fn sandwich(r: &Mat, v: &Mat) -> Mat {
    matmul(&matmul(r, v), &r.transpose())
}

/// `R^T V R`.
pub(crate) fn sandwich_t(r: &Mat, v: &Mat) -> Mat {
    matmul(&matmul(&r.transpose(), v), r)
}

/// Symmetrized Jordan product `(UV + VU)/2`.
pub(crate) fn jordan(u: &Mat, v: &Mat) -> Mat {
    let uv = matmul(u, v);
    let n = u.n;
    let mut out = Mat::zeros(n);
    for r in 0..n {
        for c in 0..n {
            out.a[r * n + c] = 0.5 * (uv.a[r * n + c] + uv.a[c * n + r]);
        }
    }
    out
}

/// Householder reduction of a symmetric matrix to tridiagonal form with
/// optional accumulation, followed by implicit-shift QL. Returns
/// eigenvalues in *increasing* order (and matching columns when requested).
pub(crate) fn eig_sym(m: &Mat, want_vectors: bool) -> (Vec<f64>, Option<Mat>) {
    let n = m.n;
    if n == 0 {
        return (vec![], if want_vectors { Some(Mat::zeros(0)) } else { None });
    }
    let mut a = m.clone();
    a.symmetrize();
    let mut p = if want_vectors { Some(Mat::identity(n)) } else { None };

    for k in 0..n.saturating_sub(2) {
        let mlen = n - k - 1;
        let mut xnorm2 = 0.0;
        for i in 0..mlen {
            let v = a.at(k + 1 + i, k);
            xnorm2 += v * v;
        }
        let xnorm = xnorm2.sqrt();
        if xnorm <= f64::MIN_POSITIVE.sqrt() {
            continue;
        }
        let alpha = a.at(k + 1, k);
        let beta = if alpha >= 0.0 { -xnorm } else { xnorm };
        let mut v: Vec<f64> = (0..mlen).map(|i| a.at(k + 1 + i, k)).collect();
        v[0] -= beta;
        let vv: f64 = v.iter().map(|z| z * z).sum();
        if vv <= f64::MIN_POSITIVE {
            continue;
        }
        let tau = 2.0 / vv;

        let mut pv = vec![0.0; mlen];
        for (i, pvi) in pv.iter_mut().enumerate() {
            let arow = &a.a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            *pvi = tau * arow.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let kappa: f64 = 0.5 * tau * v.iter().zip(&pv).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = pv.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for i in 0..mlen {
            for j in 0..mlen {
                *a.at_mut(k + 1 + i, k + 1 + j) -= v[i] * w[j] + w[i] * v[j];
            }
        }
        a.a[(k + 1) * n + k] = beta;
        a.a[k * n + k + 1] = beta;
        for i in 1..mlen {
            a.a[(k + 1 + i) * n + k] = 0.0;
            a.a[k * n + k + 1 + i] = 0.0;
        }
        if let Some(p) = p.as_mut() {
            for r in 0..n {
                let prow = &p.a[r * n + k + 1..r * n + n];
                let q: f64 = tau * prow.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
                let prow = &mut p.a[r * n + k + 1..r * n + n];
                for (x, vi) in prow.iter_mut().zip(&v) {
                    *x -= q * vi;
                }
            }
        }
    }

    let mut d: Vec<f64> = (0..n).map(|i| a.at(i, i)).collect();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { a.at(i + 1, i) } else { 0.0 }).collect();

    // implicit-shift QL on (d, e), rotating columns of p when present
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd || e[mm].abs() < 1e-300 {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            assert!(iter <= 80, "symmetric QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(if g == 0.0 { 1.0 } else { g }));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut pp = 0.0;
            let mut underflow = false;
            for i in (l..mm).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= pp;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - pp;
                r = (d[i] - g) * s + 2.0 * c * b;
                pp = s * r;
                d[i + 1] = g + pp;
                g = c * r - b;
                if let Some(p) = p.as_mut() {
                    for row in 0..n {
                        let zi = p.a[row * n + i];
                        let zi1 = p.a[row * n + i + 1];
                        p.a[row * n + i + 1] = s * zi + c * zi1;
                        p.a[row * n + i] = c * zi - s * zi1;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= pp;
            e[l] = g;
            e[mm] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = p.map(|p| {
        let mut v = Mat::zeros(n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                v.a[r * n + new_col] = p.a[r * n + old_col];
            }
        }
        v
    });
    (values, vectors)
}

/// Rebuilds `U diag(vals) U^T`.
pub(crate) fn from_eigs(vals: &[f64], u: &Mat) -> Mat {
    let n = u.n;
    let mut scaled = u.clone();
    for c in 0..n {
        for r in 0..n {
            scaled.a[r * n + c] *= vals[c];
        }
    }
    matmul(&scaled, &u.transpose())
}

/// In-place blocked Cholesky `A = L L^T`, lower triangle; returns the pivot
/// index on failure. Entries above the diagonal are left untouched.
pub(crate) fn cholesky(a: &mut Mat) -> Result<(), usize> {
    let n = a.n;
    const NB: usize = 64;
    let mut panel_buf = [0.0f64; NB];
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + NB).min(n);
        // factor the diagonal panel
        for j in k0..k1 {
            let mut ajj = a.a[j * n + j];
            for p in k0..j {
                let v = a.a[j * n + p];
                ajj -= v * v;
            }
            if !(ajj > 0.0) || !ajj.is_finite() {
                return Err(j);
            }
            let ljj = ajj.sqrt();
            a.a[j * n + j] = ljj;
            let inv = 1.0 / ljj;
            for i in j + 1..k1 {
                let mut s = a.a[i * n + j];
                for p in k0..j {
                    s -= a.a[i * n + p] * a.a[j * n + p];
                }
                a.a[i * n + j] = s * inv;
            }
        }
        // panel solve for the rows below: L21 = A21 * L11^{-T}
        for i in k1..n {
            for j in k0..k1 {
                let mut s = a.a[i * n + j];
                for p in k0..j {
                    s -= a.a[i * n + p] * a.a[j * n + p];
                }
                a.a[i * n + j] = s / a.a[j * n + j];
            }
        }
        // trailing update: A22 -= L21 L21^T, lower triangle only
        let w = k1 - k0;
        for i in k1..n {
            panel_buf[..w].copy_from_slice(&a.a[i * n + k0..i * n + k1]);
            let (head, tail) = a.a.split_at_mut(i * n);
            let row_i = &mut tail[..n];
            for j in k1..i {
                let lj = &head[j * n + k0..j * n + k1];
                let mut s = 0.0;
                for (x, y) in panel_buf[..w].iter().zip(lj) {
                    s += x * y;
                }
                row_i[j] -= s;
            }
            let mut s = 0.0;
            for x in &panel_buf[..w] {
                s += x * x;
            }
            row_i[i] -= s;
        }
        k0 = k1;
    }
    Ok(())
}

/// Solves `L L^T x = rhs` in place given the Cholesky factor.
pub(crate) fn chol_solve(l: &Mat, rhs: &mut [f64]) {
    let n = l.n;
    debug_assert_eq!(rhs.len(), n);
    for i in 0..n {
        let mut s = rhs[i];
        let row = &l.a[i * n..i * n + i];
        for (x, r) in row.iter().zip(rhs.iter()) {
            s -= x * r;
        }
        rhs[i] = s / l.a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= l.a[j * n + i] * rhs[j];
        }
        rhs[i] = s / l.a[i * n + i];
    }
}
