use log::warn;
use nalgebra::DMatrix;

use super::omp::EXACT_FIT_RTOL;
use super::{
    check_inputs, column_norms, incremental_modified_loo, refit_modified_loo, zero_solution, SolverId,
    SparseSolution,
};
use crate::cv_error::EstimateKind;
use crate::error::Result;
use crate::linalg::{dot, sample_variance, IncrementalQr};

/// Squared Cholesky pivot (of unit-norm columns) below which an entering
/// column is treated as collinear with the active set.
const COLLINEAR_TOL: f64 = 1e-10;

/// Least-angle regression path.
#[derive(Debug, Clone)]
pub struct LarsPath {
    /// Columns in order of entry. Collinear columns that were dropped are absent.
    pub order: Vec<usize>,
    /// `breakpoints[k]` holds the coefficients (raw column scale) after `k`
    /// equiangular steps, so `breakpoints[0]` is zero.
    pub breakpoints: Vec<Vec<f64>>,
    pub dropped: Vec<usize>,
}

struct Cholesky {
    /// Lower-triangular rows.
    l: Vec<Vec<f64>>,
}

impl Cholesky {
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        for i in 0..b.len() {
            let s: f64 = (0..i).map(|k| self.l[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / self.l[i][i];
        }
        x
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let z = self.forward(b);
        let n = z.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l[k][i] * x[k]).sum();
            x[i] = (z[i] - s) / self.l[i][i];
        }
        x
    }

    /// Appends a unit-norm column with cross products `g`; `false` if collinear.
    fn push(&mut self, g: &[f64]) -> bool {
        let mut row = self.forward(g);
        let d2 = 1.0 - dot(&row, &row);
        if d2 <= COLLINEAR_TOL {
            return false;
        }
        row.push(d2.sqrt());
        self.l.push(row);
        true
    }
}

/// Computes the LARS path on internally normalized columns, stopping after
/// `max_active` entries or once the active fit reaches least squares.
pub fn lars_path(psi: &DMatrix<f64>, y: &[f64], max_active: usize) -> Result<LarsPath> {
    check_inputs(psi, y, 1)?;
    let (n, p) = psi.shape();
    let norms = column_norms(psi);
    let x = |j: usize| psi.column(j).map(|v| v / norms[j]);
    let mut blocked: Vec<bool> = norms.iter().map(|&c| c == 0.0).collect();
    let mut order: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut chol = Cholesky { l: Vec::new() };
    let mut r = y.to_vec();
    let mut breakpoints = vec![vec![0.0; p]];
    let max_active = max_active.min(p);

    let correlations = |r: &[f64]| -> Vec<f64> {
        (0..p)
            .map(|j| psi.column(j).iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / norms[j].max(f64::MIN_POSITIVE))
            .collect()
    };
    let snapshot = |order: &[usize], beta: &[f64]| {
        let mut v = vec![0.0; p];
        for (k, &j) in order.iter().enumerate() {
            v[j] = beta[k] / norms[j];
        }
        v
    };

    let mut c = correlations(&r);
    let c0 = (0..p)
        .filter(|&j| !blocked[j])
        .map(|j| c[j].abs())
        .fold(0.0, f64::max);
    if c0 == 0.0 || max_active == 0 {
        return Ok(LarsPath {
            order,
            breakpoints,
            dropped,
        });
    }
    let mut entering = argmax_abs(&c, &blocked, &order);

    loop {
        if let Some(j) = entering.take() {
            let xj = x(j);
            let g: Vec<f64> = order.iter().map(|&k| x(k).dot(&xj)).collect();
            if chol.push(&g) {
                order.push(j);
                beta.push(0.0);
            } else {
                warn!("LARS: column {j} is collinear with the active set and is dropped");
                dropped.push(j);
            }
            blocked[j] = true;
        }
        let k = order.len();
        if k == 0 {
            break;
        }
        let big_c = order.iter().map(|&j| c[j].abs()).fold(0.0, f64::max);
        if big_c <= 1e-14 * c0 {
            break;
        }
        let s: Vec<f64> = order.iter().map(|&j| c[j].signum()).collect();
        let wt = chol.solve(&s);
        let a_a = 1.0 / dot(&s, &wt).sqrt();
        let w: Vec<f64> = wt.iter().map(|v| v * a_a).collect();
        let mut u = vec![0.0; n];
        for (kk, &j) in order.iter().enumerate() {
            let coef = w[kk] / norms[j];
            for (ui, &v) in u.iter_mut().zip(psi.column(j).iter()) {
                *ui += coef * v;
            }
        }
        let gamma_ls = big_c / a_a;
        let mut step: Option<(usize, f64)> = None;
        if k < max_active {
            for j in 0..p {
                if blocked[j] {
                    continue;
                }
                let a_j = psi.column(j).iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / norms[j];
                for (num, den) in [(big_c - c[j], a_a - a_j), (big_c + c[j], a_a + a_j)] {
                    if den <= 0.0 {
                        continue;
                    }
                    let g = (num / den).max(0.0);
                    if g < gamma_ls && step.is_none_or(|(_, best)| g < best) {
                        step = Some((j, g));
                    }
                }
            }
        }
        let gamma = step.map_or(gamma_ls, |(_, g)| g);
        for (b, wk) in beta.iter_mut().zip(&w) {
            *b += gamma * wk;
        }
        for (ri, ui) in r.iter_mut().zip(&u) {
            *ri -= gamma * ui;
        }
        breakpoints.push(snapshot(&order, &beta));
        match step {
            Some((j, _)) => {
                c = correlations(&r);
                entering = Some(j);
            }
            None => break,
        }
    }
    Ok(LarsPath {
        order,
        breakpoints,
        dropped,
    })
}

fn argmax_abs(c: &[f64], blocked: &[bool], order: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in c.iter().enumerate() {
        if blocked[j] || order.contains(&j) {
            continue;
        }
        if best.is_none_or(|(_, m)| v.abs() > m) {
            best = Some((j, v.abs()));
        }
    }
    best.map(|(j, _)| j)
}

/// LARS ranking of regressors followed by OLS refits of every path prefix;
/// the prefix with the smallest modified LOO is returned.
pub fn hybrid_lars(psi: &DMatrix<f64>, y: &[f64]) -> Result<SparseSolution> {
    check_inputs(psi, y, 2)?;
    let (n, p) = psi.shape();
    let y_norm = dot(y, y).sqrt();
    if y_norm == 0.0 {
        return Ok(zero_solution(psi, SolverId::Lars, EstimateKind::ModifiedLoo));
    }
    let path = lars_path(psi, y, (n - 1).min(p))?;
    let var = sample_variance(y);
    let mut inc = IncrementalQr::new(y);
    let mut kept = Vec::with_capacity(path.order.len());
    let mut best = (f64::INFINITY, 0usize);
    for &j in &path.order {
        let col: Vec<f64> = psi.column(j).iter().copied().collect();
        if !inc.push(&col) {
            continue;
        }
        kept.push(j);
        let score = incremental_modified_loo(&inc, var);
        if score < best.0 || kept.len() == 1 {
            best = (score, kept.len());
        }
        if dot(inc.residual(), inc.residual()).sqrt() <= EXACT_FIT_RTOL * y_norm {
            break;
        }
    }
    if kept.is_empty() {
        return Ok(zero_solution(psi, SolverId::Lars, EstimateKind::ModifiedLoo));
    }
    kept.truncate(best.1.max(1));
    refit_modified_loo(psi, y, kept, SolverId::Lars)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_entry_order() {
        let psi = DMatrix::identity(4, 4);
        let y = [0.5, -3.0, 1.0, 2.0];
        let path = lars_path(&psi, &y, 4).unwrap();
        assert_eq!(path.order, vec![1, 3, 2, 0]);
        let last = path.breakpoints.last().unwrap();
        for i in 0..4 {
            assert!((last[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sparse() {
        let psi = DMatrix::from_fn(8, 3, |i, j| ((i + 1) as f64 * (j as f64 + 0.7)).sin());
        let y: Vec<f64> = (0..8).map(|i| 2.5 * psi[(i, 1)]).collect();
        let s = hybrid_lars(&psi, &y).unwrap();
        assert_eq!(s.active, vec![1]);
        assert!((s.coefficients[1] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn collinear_column_never_both_active() {
        let psi = DMatrix::from_fn(6, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 * i as f64,
        });
        let y: Vec<f64> = (0..6).map(|i| 1.0 + i as f64 + 0.1 * ((i * i) as f64)).collect();
        let path = lars_path(&psi, &y, 3).unwrap();
        assert_eq!(path.order.len(), 2);
        assert!(!(path.order.contains(&1) && path.order.contains(&2)));
    }
}
