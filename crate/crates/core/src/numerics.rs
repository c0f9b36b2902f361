//! Dense linear-algebra kernels shared by the clustering algorithms.
//!
//! The symmetric eigensolver is a Householder tridiagonalization followed by
//! implicit-shift QL iterations (the EISPACK `tred2`/`tql2` pair). Matrices
//! here are at most a few hundred rows on a side, so nothing is blocked or
//! parallelized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues (or singular values) at or below this multiple of the largest
/// one are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Asymmetry tolerance, relative to the largest absolute entry.
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        &scaled * self.vectors.transpose()
    }
}

fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Largest |a_ij - a_ji|.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("matrix has non-finite entries".into()));
    }
    let skew = asymmetry(a);
    if skew > SYMMETRY_TOL * max_abs(a) {
        return Err(Error::NotSymmetric { asymmetry: skew });
    }
    if n == 0 {
        return Ok(SymEigen { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) });
    }

    // Work on the symmetrized lower triangle.
    let mut v = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| d[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

/// Householder reduction to tridiagonal form, accumulating the transform in `v`.
fn tred2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal (d, e), rotating the columns of `v`.
fn tql2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Invalid("QL iteration failed to converge".into()));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[(k, i + 1)];
                        let vk = v[(k, i)];
                        v[(k, i + 1)] = s * vk + c * vk1;
                        v[(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Symmetric inverse square root `A^{-1/2}` of a positive definite matrix.
pub fn inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(a)?;
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= 0.0 || lo <= RANK_TOL * hi {
        return Err(Error::SingularMatrix { min_eig: lo });
    }
    Ok(eig.map_spectrum(|l| 1.0 / l.sqrt()))
}

/// Symmetric square root of a positive semi-definite matrix. Eigenvalues in
/// `[-RANK_TOL·λ_max, 0)` are clamped to zero.
pub fn sqrt_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(a)?;
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let (lo, hi) = (eig.min(), eig.max());
    if lo < -RANK_TOL * hi.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd { min_eig: lo });
    }
    Ok(eig.map_spectrum(|l| l.max(0.0).sqrt()))
}

/// Orthogonal projection onto the column space of an n×d matrix.
///
/// Held in factored form `H = QQᵀ` with `Q` an n×r orthonormal basis, so that
/// products `Hv` cost O(nr) and nothing n×n is allocated unless asked for.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    basis: DMatrix<f64>,
}

impl ProjectionMatrix {
    /// Wraps a basis with orthonormal columns. The caller guarantees `QᵀQ = I`.
    pub fn from_orthonormal_basis(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    pub fn identity(n: usize) -> Self {
        Self { basis: DMatrix::identity(n, n) }
    }

    pub fn zero(n: usize) -> Self {
        Self { basis: DMatrix::zeros(n, 0) }
    }

    /// Side length n of the (implicit) n×n matrix.
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.basis.tr_mul(v);
        &self.basis * coeffs
    }

    /// `HM` for an n×k matrix.
    pub fn apply_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let coeffs = self.basis.tr_mul(m);
        &self.basis * coeffs
    }

    /// `vᵀHv = ‖Qᵀv‖²`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        self.basis.tr_mul(v).norm_squared()
    }

    /// Diagonal entries `H_ii`.
    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.basis.row_iter().map(|r| r.norm_squared()))
    }

    /// Column `i` of H.
    pub fn column(&self, i: usize) -> DVector<f64> {
        &self.basis * self.basis.row(i).transpose()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// `H = X(XᵀX)†Xᵀ`, computed from the thin SVD of X. Singular values at or
/// below `RANK_TOL·σ_max` are dropped.
pub fn projection_onto_range(x: &DMatrix<f64>) -> ProjectionMatrix {
    let n = x.nrows();
    if x.ncols() == 0 || n == 0 {
        return ProjectionMatrix::zero(n);
    }
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    if sigma_max == 0.0 {
        return ProjectionMatrix::zero(n);
    }
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_TOL * sigma_max)
        .map(|(i, _)| i)
        .collect();
    let basis = DMatrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])]);
    ProjectionMatrix { basis }
}

/// Numerical rank with the same cutoff as [`projection_onto_range`].
pub fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0;
    }
    let sv = x.clone().singular_values();
    let top = sv.iter().fold(0.0_f64, |m, &s| m.max(s));
    sv.iter().filter(|&&s| top > 0.0 && s > RANK_TOL * top).count()
}

/// Solves `Av = b` for symmetric positive definite A by Cholesky.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}
