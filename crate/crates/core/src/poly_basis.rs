//! Orthonormal polynomial families and regression-matrix assembly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{PceError, Result};
use crate::multi_index::{MultiIndex, MultiIndexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFamily {
    /// Legendre polynomials orthonormal under the uniform law on `[-1, 1]`.
    Legendre,
    /// Probabilists' Hermite polynomials scaled by `1/sqrt(k!)`,
    /// orthonormal under the standard normal law.
    Hermite,
}

impl BasisFamily {
    /// Values `psi_0(u), ..., psi_max(u)` by the orthonormal three-term
    /// recurrence.
    pub fn eval_all(self, max_degree: u32, u: f64, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        if max_degree == 0 {
            return;
        }
        match self {
            BasisFamily::Legendre => {
                out.push(3f64.sqrt() * u);
                for n in 1..max_degree as usize {
                    let nf = n as f64;
                    let b_n = nf / (4.0 * nf * nf - 1.0).sqrt();
                    let b_n1 = (nf + 1.0) / (4.0 * (nf + 1.0) * (nf + 1.0) - 1.0).sqrt();
                    let next = (u * out[n] - b_n * out[n - 1]) / b_n1;
                    out.push(next);
                }
            }
            BasisFamily::Hermite => {
                out.push(u);
                for n in 1..max_degree as usize {
                    let nf = n as f64;
                    let next = (u * out[n] - nf.sqrt() * out[n - 1]) / (nf + 1.0).sqrt();
                    out.push(next);
                }
            }
        }
    }

    pub fn eval(self, degree: u32, u: f64) -> f64 {
        let mut buf = Vec::with_capacity(degree as usize + 1);
        self.eval_all(degree, u, &mut buf);
        buf[degree as usize]
    }
}

pub fn eval_univariate(family: BasisFamily, degree: u32, u: f64) -> f64 {
    family.eval(degree, u)
}

/// Tensor-product basis function `prod_i psi_{alpha_i}(u_i)`.
pub fn eval_multivariate(families: &[BasisFamily], alpha: &MultiIndex, u: &[f64]) -> Result<f64> {
    if families.len() != alpha.dim() {
        return Err(PceError::DimensionMismatch {
            expected: families.len(),
            got: alpha.dim(),
        });
    }
    if u.len() != alpha.dim() {
        return Err(PceError::DimensionMismatch {
            expected: alpha.dim(),
            got: u.len(),
        });
    }
    Ok(alpha
        .degrees()
        .iter()
        .zip(families)
        .zip(u)
        .filter(|((&k, _), _)| k > 0)
        .map(|((&k, &f), &x)| f.eval(k, x))
        .product())
}

/// A multi-index set paired with its univariate families, prepared for
/// repeated evaluation. Each basis function is stored as its list of
/// `(dimension, degree)` factors with non-zero degree.
#[derive(Debug, Clone)]
pub struct PolyBasis {
    set: MultiIndexSet,
    families: Vec<BasisFamily>,
    factors: Vec<Vec<(usize, u32)>>,
    max_degrees: Vec<u32>,
}

impl PolyBasis {
    pub fn new(set: MultiIndexSet, families: Vec<BasisFamily>) -> Result<Self> {
        if set.dim() != families.len() && !set.is_empty() {
            return Err(PceError::DimensionMismatch {
                expected: families.len(),
                got: set.dim(),
            });
        }
        let factors = set
            .iter()
            .map(|a| {
                a.degrees()
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| (i, k))
                    .collect()
            })
            .collect();
        let mut max_degrees = set.max_degrees();
        max_degrees.resize(families.len(), 0);
        Ok(Self {
            set,
            families,
            factors,
            max_degrees,
        })
    }

    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn families(&self) -> &[BasisFamily] {
        &self.families
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Regression matrix `Psi[i, j] = psi_{alpha_j}(u_i)` for standardized
    /// points stored row-wise in `points` (N x d).
    pub fn matrix(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = self.families.len();
        if points.ncols() != d {
            return Err(PceError::DimensionMismatch {
                expected: d,
                got: points.ncols(),
            });
        }
        let n = points.nrows();
        let mut psi = DMatrix::zeros(n, self.len());
        let mut cache: Vec<Vec<f64>> = vec![Vec::new(); d];
        for row in 0..n {
            for (dim, values) in cache.iter_mut().enumerate() {
                self.families[dim].eval_all(self.max_degrees[dim], points[(row, dim)], values);
            }
            for (col, factors) in self.factors.iter().enumerate() {
                let v: f64 = factors.iter().map(|&(i, k)| cache[i][k as usize]).product();
                if !v.is_finite() {
                    return Err(PceError::NonFinite { row, column: col });
                }
                psi[(row, col)] = v;
            }
        }
        Ok(psi)
    }

    /// `sum_j coefficients[j] * psi_j(u)` for every row of `points`,
    /// summing only over the listed `terms` in the order given.
    pub fn evaluate_terms(
        &self,
        points: &DMatrix<f64>,
        terms: &[usize],
        coefficients: &[f64],
    ) -> Result<Vec<f64>> {
        let d = self.families.len();
        if points.ncols() != d {
            return Err(PceError::DimensionMismatch {
                expected: d,
                got: points.ncols(),
            });
        }
        let mut cache: Vec<Vec<f64>> = vec![Vec::new(); d];
        let mut out = Vec::with_capacity(points.nrows());
        for row in 0..points.nrows() {
            for (dim, values) in cache.iter_mut().enumerate() {
                self.families[dim].eval_all(self.max_degrees[dim], points[(row, dim)], values);
            }
            let mut acc = 0.0;
            for &j in terms {
                let v: f64 = self.factors[j]
                    .iter()
                    .map(|&(i, k)| cache[i][k as usize])
                    .product();
                acc += coefficients[j] * v;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

pub fn build_regression_matrix(
    set: &MultiIndexSet,
    families: &[BasisFamily],
    points: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if set.is_empty() {
        return Err(PceError::InvalidArgument("empty multi-index set".into()));
    }
    PolyBasis::new(set.clone(), families.to_vec())?.matrix(points)
}
