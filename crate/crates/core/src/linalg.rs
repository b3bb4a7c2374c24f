//! Dense small-d linear algebra: Mahalanobis geometry, matrix norms,
//! spectral comparisons and PSD factorizations.
//!
//! Symmetric eigendecompositions use Householder tridiagonalization followed
//! by the implicit QL iteration. Storage is `nalgebra::DMatrix`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical tolerances shared by every check in this module.
///
/// All thresholds are relative to the largest eigenvalue (or spectral norm)
/// so that downstream checks are scale-equivariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub symmetry: f64,
    pub psd: f64,
    pub invertible: f64,
    pub sandwich: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        symmetry: 1e-10,
        psd: 1e-10,
        invertible: 1e-12,
        sandwich: 1e-9,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::DEFAULT
    }
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEigen {
    /// Rebuilds `V diag(f(λ)) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.transpose()
    }
}

/// Eigendecomposition of a symmetric matrix. Only the lower triangle is read.
pub fn sym_eigen(a: &DMatrix<f64>) -> SymEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen needs a square matrix");
    let mut v = a.clone();
    for i in 0..n {
        for j in 0..i {
            v[(j, i)] = v[(i, j)];
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n > 0 {
        tred2(&mut v, &mut d, &mut e);
        tql2(&mut v, &mut d, &mut e);
    }
    SymEigen {
        values: DVector::from_vec(d),
        vectors: v,
    }
}

// Householder reduction to tridiagonal form. On exit `v` holds the
// accumulated orthogonal transform, `d` the diagonal and `e[1..]` the
// subdiagonal.
fn tred2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
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
    for i in 0..n.saturating_sub(1) {
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

// Implicit QL on the tridiagonal matrix, then sort ascending.
fn tql2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
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
        let m = m.min(n - 1);
        if m > l {
            loop {
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
                for di in d.iter_mut().take(n).skip(l + 2) {
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
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
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
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            v.swap_columns(i, k);
        }
    }
}

/// Symmetric positive semidefinite matrix with a cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct PsdMatrix {
    entries: DMatrix<f64>,
    eig: SymEigen,
    invertible: bool,
}

impl PsdMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        PsdMatrix::with_tolerances(entries, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(entries: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 || entries.ncols() != d {
            return Err(Error::BadShape(format!(
                "expected a nonempty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPsd("non-finite entry".into()));
        }
        let eig = sym_eigen(&entries);
        let lmax = eig.values[d - 1].abs().max(eig.values[0].abs());
        let asym = (&entries - entries.transpose()).amax();
        if asym > tol.symmetry * lmax.max(f64::MIN_POSITIVE) && asym > 0.0 {
            return Err(Error::NotPsd(format!("asymmetry {asym:e}")));
        }
        let lmin = eig.values[0];
        if lmin < -tol.psd * lmax {
            return Err(Error::NotPsd(format!("eigenvalue {lmin:e} is negative")));
        }
        let invertible = lmax > 0.0 && lmin > tol.invertible * lmax;
        // Symmetrize so that downstream products see an exactly symmetric matrix.
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(PsdMatrix {
            entries,
            eig,
            invertible,
        })
    }

    pub fn identity(d: usize) -> Self {
        PsdMatrix::new(DMatrix::identity(d, d)).expect("identity is PSD")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        PsdMatrix::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_row_slice(d: usize, values: &[f64]) -> Result<Self> {
        if values.len() != d * d {
            return Err(Error::BadShape(format!("need {} entries", d * d)));
        }
        PsdMatrix::new(DMatrix::from_row_slice(d, d, values))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eig.values
    }

    pub fn eigen(&self) -> &SymEigen {
        &self.eig
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eig.values[self.dim() - 1]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.values[0]
    }

    /// The k-th largest eigenvalue, 1-based.
    pub fn kth_largest_eigenvalue(&self, k: usize) -> f64 {
        self.eig.values[self.dim() - k]
    }

    fn require_invertible(&self) -> Result<()> {
        if self.invertible {
            Ok(())
        } else {
            Err(Error::SingularMatrix)
        }
    }

    /// Symmetric square root. Tiny negative eigenvalues are clipped to zero.
    pub fn sqrt(&self) -> DMatrix<f64> {
        self.eig.map(|l| l.max(0.0).sqrt())
    }

    pub fn inv_sqrt(&self) -> Result<DMatrix<f64>> {
        self.require_invertible()?;
        Ok(self.eig.map(|l| 1.0 / l.sqrt()))
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.require_invertible()?;
        Ok(self.eig.map(|l| 1.0 / l))
    }

    pub fn log_det(&self) -> Result<f64> {
        self.require_invertible()?;
        Ok(self.eig.values.iter().map(|l| l.ln()).sum())
    }

    /// `vᵀ Σ⁻¹ v`, computed in the eigenbasis.
    pub fn inv_quad_form(&self, v: &[f64]) -> Result<f64> {
        self.require_invertible()?;
        if v.len() != self.dim() {
            return Err(Error::BadShape(format!(
                "vector of length {} against {}x{} matrix",
                v.len(),
                self.dim(),
                self.dim()
            )));
        }
        let mut acc = 0.0;
        for j in 0..self.dim() {
            let col = self.eig.vectors.column(j);
            let p: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += p * p / self.eig.values[j];
        }
        Ok(acc)
    }

    /// `A Σ Aᵀ`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<PsdMatrix> {
        PsdMatrix::new(a * &self.entries * a.transpose())
    }

    pub fn scaled(&self, c: f64) -> Result<PsdMatrix> {
        PsdMatrix::new(&self.entries * c)
    }
}

/// Mahalanobis norm `‖v‖_Σ = √(vᵀ Σ⁻¹ v)`.
pub fn mahalanobis(v: &[f64], sigma: &PsdMatrix) -> Result<f64> {
    Ok(sigma.inv_quad_form(v)?.max(0.0).sqrt())
}

/// Trace (nuclear), Frobenius and spectral norms of a square matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixNorms {
    pub trace_norm: f64,
    pub frobenius: f64,
    pub spectral: f64,
}

/// Singular values in descending order, from the eigenvalues of `AᵀA`.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let ata = a.transpose() * a;
    let mut s: Vec<f64> = sym_eigen(&ata)
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    s.reverse();
    s
}

pub fn matrix_norms(a: &DMatrix<f64>) -> MatrixNorms {
    let s = singular_values(a);
    // Frobenius from the entries is more accurate than from squared singular values.
    let frobenius = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    MatrixNorms {
        trace_norm: s.iter().sum(),
        frobenius,
        spectral: s.first().copied().unwrap_or(0.0),
    }
}

/// Trace norm of a symmetric matrix, summing absolute eigenvalues.
pub fn sym_trace_norm(a: &DMatrix<f64>) -> f64 {
    sym_eigen(a).values.iter().map(|l| l.abs()).sum()
}

/// Eigenvalues of `Σ₁^{-1/2} Σ₂ Σ₁^{-1/2}`, ascending.
pub fn relative_eigenvalues(sigma1: &PsdMatrix, sigma2: &PsdMatrix) -> Result<DVector<f64>> {
    if sigma1.dim() != sigma2.dim() {
        return Err(Error::BadShape("dimension mismatch".into()));
    }
    let w = sigma1.inv_sqrt()?;
    Ok(sym_eigen(&(&w * sigma2.matrix() * &w)).values)
}

/// Whether `(1−γ)Σ₁ ⪯ Σ₂ ⪯ (1+γ)Σ₁` holds.
pub fn spectral_sandwich(sigma1: &PsdMatrix, sigma2: &PsdMatrix, gamma: f64) -> Result<bool> {
    spectral_sandwich_tol(sigma1, sigma2, gamma, &Tolerances::DEFAULT)
}

pub fn spectral_sandwich_tol(
    sigma1: &PsdMatrix,
    sigma2: &PsdMatrix,
    gamma: f64,
    tol: &Tolerances,
) -> Result<bool> {
    sigma2.require_invertible()?;
    let ev = relative_eigenvalues(sigma1, sigma2)?;
    let lo = 1.0 - gamma - tol.sandwich;
    let hi = 1.0 + gamma + tol.sandwich;
    Ok(ev.iter().all(|&l| l >= lo && l <= hi))
}

/// Smallest γ for which the sandwich holds.
pub fn sandwich_gamma(sigma1: &PsdMatrix, sigma2: &PsdMatrix) -> Result<f64> {
    let ev = relative_eigenvalues(sigma1, sigma2)?;
    Ok(ev.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max))
}

/// `Σ^{1/2}` and `Σ^{-1/2}`.
pub fn psd_factor(sigma: &PsdMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((sigma.sqrt(), sigma.inv_sqrt()?))
}

/// Coordinate-wise mean of a set of rows.
pub fn sample_mean(rows: impl Iterator<Item = impl AsRef<[f64]>>, d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    let mut m = 0usize;
    for r in rows {
        for (a, b) in mean.iter_mut().zip(r.as_ref()) {
            *a += b;
        }
        m += 1;
    }
    if m > 0 {
        for a in &mut mean {
            *a /= m as f64;
        }
    }
    mean
}

/// `(1/m) Σ vᵢ vᵢᵀ` over the given vectors.
pub fn second_moment(rows: impl Iterator<Item = impl AsRef<[f64]>>, d: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(d, d);
    let mut m = 0usize;
    for r in rows {
        let r = r.as_ref();
        for i in 0..d {
            for j in 0..=i {
                s[(i, j)] += r[i] * r[j];
            }
        }
        m += 1;
    }
    for i in 0..d {
        for j in 0..i {
            s[(j, i)] = s[(i, j)];
        }
    }
    if m > 0 {
        s /= m as f64;
    }
    s
}

pub fn mat_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(v)).as_slice().to_vec()
}
