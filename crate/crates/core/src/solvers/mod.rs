//! Sparse regression solvers on a fixed candidate basis.
//!
//! Each solver selects its own hyperparameter (number of active terms or
//! noise level) and reports the criterion it used for that choice. All of
//! them work on the raw regression matrix; column normalization, where an
//! algorithm needs it, is internal to ranking steps only.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cv_error::{factor_from_fit, loo_from_fit, ErrorEstimate, EstimateKind};
use crate::error::{PceError, Result};
use crate::linalg::{self, ls_fit};

mod bcs;
mod lars;
mod omp;
mod subspace;

pub use bcs::{bcs, fast_laplace, FastLaplaceFit};
pub use lars::{hybrid_lars, lars_path, LarsPath};
pub use omp::omp;
pub use subspace::{sp_select_kfold, sp_select_loo, subspace_pursuit, SpFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SolverId {
    Lars,
    Omp,
    SpK5,
    SpLoo,
    Bcs,
}

impl SolverId {
    pub const ALL: [SolverId; 5] = [
        SolverId::Lars,
        SolverId::Omp,
        SolverId::SpK5,
        SolverId::SpLoo,
        SolverId::Bcs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverId::Lars => "lars",
            SolverId::Omp => "omp",
            SolverId::SpK5 => "spk5",
            SolverId::SpLoo => "sploo",
            SolverId::Bcs => "bcs",
        }
    }

    /// Criterion the solver uses for its hyperparameter.
    pub fn criterion_kind(&self, n: usize) -> EstimateKind {
        match self {
            SolverId::Lars | SolverId::Omp | SolverId::SpLoo => EstimateKind::ModifiedLoo,
            SolverId::SpK5 => EstimateKind::KFold(5.min(n)),
            SolverId::Bcs => EstimateKind::KFold(10.min(n)),
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverId {
    type Err = PceError;
    fn from_str(s: &str) -> Result<Self> {
        SolverId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| PceError::UnknownId(s.to_string()))
    }
}

impl From<SolverId> for String {
    fn from(id: SolverId) -> Self {
        id.as_str().to_string()
    }
}

impl TryFrom<String> for SolverId {
    type Error = PceError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Seed of the fold assignment used by the k-fold solvers.
    pub cv_seed: u64,
    /// Iteration cap of a single subspace-pursuit run.
    pub sp_max_iter: usize,
    /// Noise-variance multipliers tried by BCS.
    pub bcs_eta_grid: Vec<f64>,
    /// Largest basis for which subspace pursuit caches the Gram matrix.
    pub gram_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            cv_seed: 0,
            sp_max_iter: 100,
            bcs_eta_grid: log_grid(1e-8, 1e-1, 7),
            gram_limit: 2000,
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSolution {
    /// One entry per candidate column, zero off `active`.
    pub coefficients: Vec<f64>,
    /// Sorted column indices of the active regressors.
    pub active: Vec<usize>,
    pub criterion: ErrorEstimate,
    pub solver: SolverId,
}

impl SparseSolution {
    pub fn active_coefficients(&self) -> Vec<f64> {
        self.active.iter().map(|&j| self.coefficients[j]).collect()
    }
}

pub fn solve(id: SolverId, psi: &DMatrix<f64>, y: &[f64], opts: &SolverOptions) -> Result<SparseSolution> {
    match id {
        SolverId::Lars => hybrid_lars(psi, y),
        SolverId::Omp => omp(psi, y),
        SolverId::SpK5 => sp_select_kfold(psi, y, 5, opts),
        SolverId::SpLoo => sp_select_loo(psi, y, opts),
        SolverId::Bcs => bcs(psi, y, opts),
    }
}

pub(crate) fn check_inputs(psi: &DMatrix<f64>, y: &[f64], min_rows: usize) -> Result<()> {
    if psi.nrows() != y.len() {
        return Err(PceError::DimensionMismatch {
            expected: psi.nrows(),
            got: y.len(),
        });
    }
    if psi.nrows() < min_rows {
        return Err(PceError::InvalidArgument(format!(
            "solver needs at least {min_rows} observations, got {}",
            psi.nrows()
        )));
    }
    if psi.ncols() == 0 {
        return Err(PceError::InvalidArgument("empty candidate basis".into()));
    }
    Ok(())
}

/// First column whose entries are identical and non-zero.
pub(crate) fn constant_column(psi: &DMatrix<f64>) -> Option<usize> {
    (0..psi.ncols()).find(|&j| {
        let c = psi.column(j);
        c[0] != 0.0 && c.iter().all(|&v| v == c[0])
    })
}

/// Solution for identically zero responses.
pub(crate) fn zero_solution(psi: &DMatrix<f64>, solver: SolverId, kind: EstimateKind) -> SparseSolution {
    SparseSolution {
        coefficients: vec![0.0; psi.ncols()],
        active: constant_column(psi).into_iter().collect(),
        criterion: ErrorEstimate::degenerate(kind),
        solver,
    }
}

pub(crate) fn column_norms(psi: &DMatrix<f64>) -> Vec<f64> {
    psi.column_iter().map(|c| c.norm()).collect()
}

/// Indices of the `k` largest scores; ties go to the lower index.
pub(crate) fn top_k(scores: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut v: Vec<(usize, f64)> = scores
        .iter()
        .copied()
        .filter(|(_, s)| s.is_finite())
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().take(k).map(|(j, _)| j).collect()
}

/// OLS refit on `active` with its modified-LOO score.
pub(crate) fn refit_modified_loo(
    psi: &DMatrix<f64>,
    y: &[f64],
    mut active: Vec<usize>,
    solver: SolverId,
) -> Result<SparseSolution> {
    active.sort_unstable();
    let sub = linalg::columns(psi, &active);
    let fit = ls_fit(&sub, y)?;
    let value = if active.len() >= y.len() {
        f64::INFINITY
    } else {
        factor_from_fit(&fit, y.len()) * loo_from_fit(&fit, y)
    };
    let mut coefficients = vec![0.0; psi.ncols()];
    for (k, &j) in active.iter().enumerate() {
        coefficients[j] = fit.coefficients[k];
    }
    Ok(SparseSolution {
        coefficients,
        active,
        criterion: ErrorEstimate::new(value, EstimateKind::ModifiedLoo),
        solver,
    })
}

/// OLS refit on `active` carrying an externally computed criterion.
pub(crate) fn refit_with_criterion(
    psi: &DMatrix<f64>,
    y: &[f64],
    mut active: Vec<usize>,
    criterion: ErrorEstimate,
    solver: SolverId,
) -> Result<SparseSolution> {
    active.sort_unstable();
    let mut coefficients = vec![0.0; psi.ncols()];
    if !active.is_empty() {
        let c = linalg::ols(&linalg::columns(psi, &active), y)?;
        for (k, &j) in active.iter().enumerate() {
            coefficients[j] = c[k];
        }
    }
    Ok(SparseSolution {
        coefficients,
        active,
        criterion,
        solver,
    })
}

/// Modified LOO of the current state of an incremental factorization.
pub(crate) fn incremental_modified_loo(inc: &linalg::IncrementalQr, var: f64) -> f64 {
    let n = inc.residual().len();
    let k = inc.len();
    if k >= n || var <= 0.0 {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for (r, h) in inc.residual().iter().zip(inc.hat_diag()) {
        if *h >= 1.0 - crate::cv_error::HAT_TOL {
            return f64::INFINITY;
        }
        let e = r / (1.0 - h);
        acc += e * e;
    }
    let loo = acc / n as f64 / var;
    let t = n as f64 / (n - k) as f64 * (1.0 + inc.trace_inv_gram());
    t * loo
}
