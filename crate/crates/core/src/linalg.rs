//! Dense least-squares kernels shared by the solvers and the error
//! estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{PceError, Result};

/// Relative threshold below which a diagonal entry of `R` (or a singular
/// value) is treated as zero.
pub const RANK_RTOL: f64 = 1e-12;

/// Copies the listed columns of `m` into a new matrix.
pub fn columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.column_mut(k).copy_from(&m.column(j));
    }
    out
}

/// Copies the listed rows of `m` into a new matrix.
pub fn rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample variance (divisor `n - 1`); zero for fewer than two values.
pub fn sample_variance(y: &[f64]) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
}

/// Ordinary least squares by Householder QR. Rank-deficient systems fall
/// back to the minimum-norm solution from the SVD with a relative
/// singular-value cutoff of [`RANK_RTOL`].
pub fn ols(psi: &DMatrix<f64>, y: &[f64]) -> Result<DVector<f64>> {
    let (n, p) = psi.shape();
    if p > n {
        return Err(PceError::Underdetermined { rows: n, cols: p });
    }
    if y.len() != n {
        return Err(PceError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    let b = DVector::from_column_slice(y);
    let qr = psi.clone().qr();
    let r = qr.r();
    let rmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if rmax > 0.0 && (0..p).all(|i| r[(i, i)].abs() > RANK_RTOL * rmax) {
        let qtb = qr.q().tr_mul(&b);
        if let Some(c) = r.solve_upper_triangular(&qtb) {
            return Ok(c);
        }
    }
    min_norm(psi, &b)
}

fn min_norm(psi: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = psi.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (RANK_RTOL * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps)
        .map_err(|e| PceError::InvalidArgument(format!("SVD solve failed: {e}")))
}

/// OLS fit with the quantities needed by leave-one-out estimators.
#[derive(Debug, Clone)]
pub struct LsFit {
    pub coefficients: DVector<f64>,
    pub residuals: Vec<f64>,
    /// Diagonal of the hat matrix `Psi (Psi^T Psi)^-1 Psi^T`.
    pub hat_diag: Vec<f64>,
    /// `tr((Psi^T Psi)^-1)`.
    pub trace_inv_gram: f64,
    pub full_rank: bool,
}

/// QR-based OLS on a tall, full-column-rank matrix. Rank-deficient input
/// yields `full_rank = false`, minimum-norm coefficients and infinite trace.
pub fn ls_fit(psi: &DMatrix<f64>, y: &[f64]) -> Result<LsFit> {
    let (n, p) = psi.shape();
    if p > n {
        return Err(PceError::Underdetermined { rows: n, cols: p });
    }
    if y.len() != n {
        return Err(PceError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if p == 0 {
        return Ok(LsFit {
            coefficients: DVector::zeros(0),
            residuals: y.to_vec(),
            hat_diag: vec![0.0; n],
            trace_inv_gram: 0.0,
            full_rank: true,
        });
    }
    let qr = psi.clone().qr();
    let r = qr.r();
    let rmax = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let full_rank = rmax > 0.0 && (0..p).all(|i| r[(i, i)].abs() > RANK_RTOL * rmax);
    if !full_rank {
        let c = min_norm(psi, &DVector::from_column_slice(y))?;
        let fitted = psi * &c;
        return Ok(LsFit {
            residuals: y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect(),
            coefficients: c,
            hat_diag: vec![1.0; n],
            trace_inv_gram: f64::INFINITY,
            full_rank: false,
        });
    }
    let q = qr.q();
    let b = DVector::from_column_slice(y);
    let qtb = q.tr_mul(&b);
    let coefficients = r
        .solve_upper_triangular(&qtb)
        .expect("non-singular triangular factor");
    let fitted = &q * &qtb;
    let residuals = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let hat_diag = (0..n)
        .map(|i| q.row(i).iter().map(|v| v * v).sum())
        .collect();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("non-singular triangular factor");
    let trace_inv_gram = r_inv.iter().map(|v| v * v).sum();
    Ok(LsFit {
        coefficients,
        residuals,
        hat_diag,
        trace_inv_gram,
        full_rank,
    })
}

/// Orthogonal basis of a growing set of columns, maintained by modified
/// Gram-Schmidt with reorthogonalization. Tracks the residual of `y`, the
/// hat-matrix diagonal and `R^-1`, so that leave-one-out scores of every
/// prefix cost `O(N)` beyond the orthogonalization itself.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    n: usize,
    q: Vec<Vec<f64>>,
    /// Columns of the upper-triangular `R^-1`, column `k` has `k + 1` entries.
    r_inv: Vec<Vec<f64>>,
    /// Columns of `R`.
    r: Vec<Vec<f64>>,
    qty: Vec<f64>,
    residual: Vec<f64>,
    hat: Vec<f64>,
    trace_inv_gram: f64,
}

impl IncrementalQr {
    pub fn new(y: &[f64]) -> Self {
        Self {
            n: y.len(),
            q: Vec::new(),
            r_inv: Vec::new(),
            r: Vec::new(),
            qty: Vec::new(),
            residual: y.to_vec(),
            hat: vec![0.0; y.len()],
            trace_inv_gram: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn hat_diag(&self) -> &[f64] {
        &self.hat
    }

    pub fn trace_inv_gram(&self) -> f64 {
        self.trace_inv_gram
    }

    /// Appends a column. Returns `false` (and leaves the state untouched)
    /// when the column is numerically inside the current span.
    pub fn push(&mut self, col: &[f64]) -> bool {
        assert_eq!(col.len(), self.n);
        let k = self.q.len();
        if k >= self.n {
            return false;
        }
        let norm0 = dot(col, col).sqrt();
        if norm0 == 0.0 {
            return false;
        }
        let mut v = col.to_vec();
        let mut rcol = vec![0.0; k + 1];
        for _ in 0..2 {
            for (j, qj) in self.q.iter().enumerate() {
                let c = dot(qj, &v);
                rcol[j] += c;
                for (vi, qi) in v.iter_mut().zip(qj) {
                    *vi -= c * qi;
                }
            }
        }
        let rho = dot(&v, &v).sqrt();
        if rho <= 1e-10 * norm0 {
            return false;
        }
        for vi in &mut v {
            *vi /= rho;
        }
        rcol[k] = rho;

        // R^-1 of [[R, r], [0, rho]] = [[R^-1, -R^-1 r / rho], [0, 1 / rho]]
        let mut new_inv = vec![0.0; k + 1];
        for (j, inv_col) in self.r_inv.iter().enumerate() {
            for (i, &val) in inv_col.iter().enumerate() {
                new_inv[i] -= val * rcol[j] / rho;
            }
        }
        new_inv[k] = 1.0 / rho;
        self.trace_inv_gram += new_inv.iter().map(|x| x * x).sum::<f64>();

        let c = dot(&v, &self.residual);
        for ((ri, hi), qi) in self.residual.iter_mut().zip(self.hat.iter_mut()).zip(&v) {
            *ri -= c * qi;
            *hi += qi * qi;
        }
        self.qty.push(c);
        self.r_inv.push(new_inv);
        self.r.push(rcol);
        self.q.push(v);
        true
    }

    /// Coefficients of the least-squares fit on the first `k` columns.
    pub fn coefficients(&self, k: usize) -> Vec<f64> {
        let mut c = vec![0.0; k];
        for j in 0..k {
            for (i, &val) in self.r_inv[j].iter().enumerate() {
                c[i] += val * self.qty[j];
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ols_examples() {
        let c = ols(&DMatrix::identity(2, 2), &[3.0, -1.0]).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-15 && (c[1] + 1.0).abs() < 1e-15);
        let c = ols(&DMatrix::from_element(3, 1, 1.0), &[1.0, 2.0, 3.0]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-14);
        // pseudo-inverse of the rank-one all-ones 3x2 matrix maps ones to (1/2, 1/2)
        let c = ols(&DMatrix::from_element(3, 2, 1.0), &[1.0, 1.0, 1.0]).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
        assert!(matches!(
            ols(&DMatrix::zeros(2, 3), &[0.0, 0.0]),
            Err(PceError::Underdetermined { .. })
        ));
    }

    #[test]
    fn incremental_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = DMatrix::from_fn(30, 6, |_, _| rng.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut inc = IncrementalQr::new(&y);
        for k in 0..6 {
            let col: Vec<f64> = psi.column(k).iter().copied().collect();
            assert!(inc.push(&col));
            let sub = columns(&psi, &(0..=k).collect::<Vec<_>>());
            let fit = ls_fit(&sub, &y).unwrap();
            let c = inc.coefficients(k + 1);
            for j in 0..=k {
                assert!((c[j] - fit.coefficients[j]).abs() < 1e-10);
            }
            for i in 0..30 {
                assert!((inc.hat_diag()[i] - fit.hat_diag[i]).abs() < 1e-12);
                assert!((inc.residual()[i] - fit.residuals[i]).abs() < 1e-12);
            }
            assert!((inc.trace_inv_gram() - fit.trace_inv_gram).abs() < 1e-10 * fit.trace_inv_gram);
        }
        let dup: Vec<f64> = psi.column(2).iter().copied().collect();
        assert!(!inc.push(&dup));
        assert_eq!(inc.len(), 6);
    }
}
