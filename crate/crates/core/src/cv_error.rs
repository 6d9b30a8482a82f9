//! Generalization-error estimators.
//!
//! Every estimate is relative: squared errors are averaged over the design
//! and divided by the sample variance of the responses. Degenerate estimates
//! (interpolation, singular Gram matrix, constant responses) are `+inf`, which
//! orders them after every finite value.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PceError, Result};
use crate::linalg::{self, ls_fit, sample_variance, LsFit};

/// Hat-matrix entries at or above `1 - HAT_TOL` make LOO degenerate.
pub const HAT_TOL: f64 = 1e-10;

/// Fold-assignment seed used by the hybrid k-fold estimator.
pub const HYBRID_KFOLD_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EstimateKind {
    RelMse,
    Loo,
    ModifiedLoo,
    KFold(usize),
    HybridLoo,
    HybridModifiedLoo,
    HybridKFold(usize),
}

impl EstimateKind {
    pub fn as_string(&self) -> String {
        match self {
            EstimateKind::RelMse => "relmse".into(),
            EstimateKind::Loo => "loo".into(),
            EstimateKind::ModifiedLoo => "modloo".into(),
            EstimateKind::KFold(k) => format!("kfold{k}"),
            EstimateKind::HybridLoo => "hyb_loo".into(),
            EstimateKind::HybridModifiedLoo => "hyb_modloo".into(),
            EstimateKind::HybridKFold(k) => format!("hyb_kfold{k}"),
        }
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_string())
    }
}

impl From<EstimateKind> for String {
    fn from(k: EstimateKind) -> Self {
        k.as_string()
    }
}

impl TryFrom<String> for EstimateKind {
    type Error = PceError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for EstimateKind {
    type Err = PceError;

    fn from_str(s: &str) -> Result<Self> {
        let parse_k = |rest: &str| -> Result<usize> {
            rest.parse::<usize>()
                .ok()
                .filter(|&k| k >= 2)
                .ok_or_else(|| PceError::UnknownId(s.to_string()))
        };
        match s {
            "relmse" => Ok(Self::RelMse),
            "loo" => Ok(Self::Loo),
            "modloo" => Ok(Self::ModifiedLoo),
            "hyb_loo" => Ok(Self::HybridLoo),
            "hyb_modloo" => Ok(Self::HybridModifiedLoo),
            _ => {
                if let Some(rest) = s.strip_prefix("hyb_kfold") {
                    Ok(Self::HybridKFold(parse_k(rest)?))
                } else if let Some(rest) = s.strip_prefix("kfold") {
                    Ok(Self::KFold(parse_k(rest)?))
                } else {
                    Err(PceError::UnknownId(s.to_string()))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub value: f64,
    pub kind: EstimateKind,
}

impl ErrorEstimate {
    pub fn new(value: f64, kind: EstimateKind) -> Self {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        Self { value, kind }
    }

    pub fn degenerate(kind: EstimateKind) -> Self {
        Self {
            value: f64::INFINITY,
            kind,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.value.is_finite()
    }
}

/// `sum (truth - pred)^2 / sum (truth - mean(truth))^2`.
pub fn rel_mse(pred: &[f64], truth: &[f64]) -> Result<ErrorEstimate> {
    if pred.len() != truth.len() {
        return Err(PceError::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.len() < 2 {
        return Err(PceError::InvalidArgument("rel_mse needs at least two points".into()));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let den: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if den <= 0.0 {
        return Ok(ErrorEstimate::degenerate(EstimateKind::RelMse));
    }
    let num: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(ErrorEstimate::new(num / den, EstimateKind::RelMse))
}

/// Relative LOO error from an OLS fit: `mean(((y - yhat)/(1 - h))^2) / var(y)`.
pub fn loo_from_fit(fit: &LsFit, y: &[f64]) -> f64 {
    let n = y.len();
    let var = sample_variance(y);
    if !fit.full_rank || fit.coefficients.len() >= n || var <= 0.0 {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for (r, h) in fit.residuals.iter().zip(&fit.hat_diag) {
        if *h >= 1.0 - HAT_TOL {
            return f64::INFINITY;
        }
        let e = r / (1.0 - h);
        acc += e * e;
    }
    acc / n as f64 / var
}

/// `N / (N - P) * (1 + tr((Psi^T Psi)^-1))`; `1` for an empty active set.
pub fn factor_from_fit(fit: &LsFit, n: usize) -> f64 {
    let p = fit.coefficients.len();
    if p == 0 {
        return 1.0;
    }
    if p >= n || !fit.full_rank || !fit.trace_inv_gram.is_finite() {
        return f64::INFINITY;
    }
    n as f64 / (n - p) as f64 * (1.0 + fit.trace_inv_gram)
}

/// Closed-form leave-one-out error of OLS on a fixed set of columns.
pub fn loo_fast(psi_active: &DMatrix<f64>, y: &[f64]) -> Result<ErrorEstimate> {
    if psi_active.ncols() >= psi_active.nrows() {
        return Ok(ErrorEstimate::degenerate(EstimateKind::Loo));
    }
    let fit = ls_fit(psi_active, y)?;
    Ok(ErrorEstimate::new(loo_from_fit(&fit, y), EstimateKind::Loo))
}

pub fn modification_factor(n: usize, psi_active: &DMatrix<f64>) -> Result<f64> {
    if psi_active.ncols() == 0 {
        return Ok(1.0);
    }
    if psi_active.ncols() >= n {
        return Ok(f64::INFINITY);
    }
    let fit = ls_fit(psi_active, &vec![0.0; psi_active.nrows()])?;
    Ok(factor_from_fit(&fit, n))
}

/// Modified LOO: the modification factor times the LOO error.
pub fn modified_loo(psi_active: &DMatrix<f64>, y: &[f64]) -> Result<ErrorEstimate> {
    if psi_active.ncols() >= psi_active.nrows() {
        return Ok(ErrorEstimate::degenerate(EstimateKind::ModifiedLoo));
    }
    let fit = ls_fit(psi_active, y)?;
    let value = factor_from_fit(&fit, y.len()) * loo_from_fit(&fit, y);
    Ok(ErrorEstimate::new(value, EstimateKind::ModifiedLoo))
}

/// Fold label of every observation. A seeded shuffle of `0..n` is dealt
/// round-robin into `k` folds, so fold sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &obs) in order.iter().enumerate() {
        folds[obs] = pos % k;
    }
    folds
}

/// Training and held-out row indices for each fold.
pub fn fold_splits(folds: &[usize], k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..folds.len()).partition(|&i| folds[i] == f);
            (train, test)
        })
        .collect()
}

/// k-fold cross-validation of an arbitrary fitting procedure.
///
/// `fit` receives the training rows of `psi` and `y` and returns a full
/// coefficient vector (one entry per column of `psi`), or `None` when it
/// cannot produce a model; any failed fold makes the estimate degenerate.
pub fn kfold_cv<F>(psi: &DMatrix<f64>, y: &[f64], k: usize, seed: u64, mut fit: F) -> Result<ErrorEstimate>
where
    F: FnMut(&DMatrix<f64>, &[f64]) -> Option<Vec<f64>>,
{
    let n = y.len();
    if psi.nrows() != n {
        return Err(PceError::DimensionMismatch {
            expected: n,
            got: psi.nrows(),
        });
    }
    if k < 2 || k > n {
        return Err(PceError::InvalidArgument(format!(
            "k-fold CV needs 2 <= k <= N (k={k}, N={n})"
        )));
    }
    let kind = EstimateKind::KFold(k);
    let var = sample_variance(y);
    if var <= 0.0 {
        return Ok(ErrorEstimate::degenerate(kind));
    }
    let folds = fold_assignment(n, k, seed);
    let mut sse = 0.0;
    for (train, test) in fold_splits(&folds, k) {
        let psi_train = linalg::rows(psi, &train);
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let Some(c) = fit(&psi_train, &y_train) else {
            return Ok(ErrorEstimate::degenerate(kind));
        };
        for &i in &test {
            let pred: f64 = psi.row(i).iter().zip(&c).map(|(a, b)| a * b).sum();
            sse += (y[i] - pred) * (y[i] - pred);
        }
    }
    Ok(ErrorEstimate::new(sse / n as f64 / var, kind))
}

/// Hybrid estimate on a fixed active set: the active columns come from the
/// full-data fit and only the OLS coefficients are recomputed.
pub fn hybrid_estimate_matrix(
    kind: EstimateKind,
    psi_active: &DMatrix<f64>,
    y: &[f64],
) -> Result<ErrorEstimate> {
    let est = match kind {
        EstimateKind::HybridLoo => loo_fast(psi_active, y)?,
        EstimateKind::HybridModifiedLoo => modified_loo(psi_active, y)?,
        EstimateKind::HybridKFold(k) => {
            let k = k.min(y.len());
            kfold_cv(psi_active, y, k, HYBRID_KFOLD_SEED, |p, t| {
                if p.ncols() > p.nrows() {
                    return None;
                }
                linalg::ols(p, t).ok().map(|c| c.iter().copied().collect())
            })?
        }
        other => {
            return Err(PceError::InvalidArgument(format!(
                "{other} is not a hybrid estimator"
            )))
        }
    };
    Ok(ErrorEstimate::new(est.value, kind))
}
