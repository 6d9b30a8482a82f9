use nalgebra::DMatrix;

use super::{
    check_inputs, column_norms, incremental_modified_loo, refit_modified_loo, zero_solution, SolverId,
    SparseSolution,
};
use crate::cv_error::EstimateKind;
use crate::error::Result;
use crate::linalg::{sample_variance, IncrementalQr};

/// Relative residual norm at which the greedy path is considered to
/// interpolate the data; further columns would only fit rounding noise.
pub(crate) const EXACT_FIT_RTOL: f64 = 1e-12;

/// Orthogonal matching pursuit with the path length chosen by modified LOO.
pub fn omp(psi: &DMatrix<f64>, y: &[f64]) -> Result<SparseSolution> {
    check_inputs(psi, y, 2)?;
    let (n, p) = psi.shape();
    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y_norm == 0.0 {
        return Ok(zero_solution(psi, SolverId::Omp, EstimateKind::ModifiedLoo));
    }
    let var = sample_variance(y);
    let norms = column_norms(psi);
    let k_max = (n - 1).min(p);

    let mut inc = IncrementalQr::new(y);
    let mut blocked: Vec<bool> = norms.iter().map(|&c| c == 0.0).collect();
    let mut active = Vec::with_capacity(k_max);
    let mut best = (f64::INFINITY, 0usize);

    while active.len() < k_max {
        let r = inc.residual();
        let mut pick: Option<(usize, f64)> = None;
        for j in 0..p {
            if blocked[j] {
                continue;
            }
            let c = psi.column(j).iter().zip(r).map(|(a, b)| a * b).sum::<f64>().abs() / norms[j];
            if pick.is_none_or(|(_, m)| c > m) {
                pick = Some((j, c));
            }
        }
        let Some((j, _)) = pick else { break };
        blocked[j] = true;
        let col: Vec<f64> = psi.column(j).iter().copied().collect();
        if !inc.push(&col) {
            continue;
        }
        active.push(j);
        let score = incremental_modified_loo(&inc, var);
        if score < best.0 || active.len() == 1 {
            best = (score, active.len());
        }
        let r_norm = inc.residual().iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= EXACT_FIT_RTOL * y_norm {
            break;
        }
    }
    active.truncate(best.1.max(1));
    refit_modified_loo(psi, y, active, SolverId::Omp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design() {
        let psi = DMatrix::identity(3, 3);
        let s = omp(&psi, &[0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.active, vec![1]);
        assert!((s.coefficients[1] - 2.0).abs() < 1e-15);
        assert_eq!(s.coefficients[0], 0.0);
    }

    #[test]
    fn single_column() {
        let psi = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let y = [1.1, 1.9, 3.2, 3.9];
        let s = omp(&psi, &y).unwrap();
        let c = crate::linalg::ols(&psi, &y).unwrap();
        assert_eq!(s.active, vec![0]);
        assert!((s.coefficients[0] - c[0]).abs() < 1e-14);
    }

    #[test]
    fn zero_response() {
        let psi = DMatrix::from_fn(5, 3, |i, j| if j == 0 { 1.0 } else { (i * j) as f64 });
        let s = omp(&psi, &[0.0; 5]).unwrap();
        assert_eq!(s.active, vec![0]);
        assert!(s.coefficients.iter().all(|&c| c == 0.0));
    }
}
