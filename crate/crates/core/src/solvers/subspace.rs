use nalgebra::{DMatrix, DVector};

use super::omp::EXACT_FIT_RTOL;
use super::{
    check_inputs, column_norms, refit_modified_loo, refit_with_criterion, top_k, zero_solution, SolverId,
    SolverOptions, SparseSolution,
};
use crate::cv_error::{fold_assignment, fold_splits, ErrorEstimate, EstimateKind};
use crate::error::{PceError, Result};
use crate::linalg::{self, dot, sample_variance};

/// Result of one subspace-pursuit run at fixed sparsity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpFit {
    /// Sorted support.
    pub support: Vec<usize>,
    /// Least-squares coefficients on `support`.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
}

/// Problem data shared by the runs of one sweep.
struct SpProblem<'a> {
    psi: &'a DMatrix<f64>,
    y: &'a [f64],
    norms: Vec<f64>,
    gram: Option<DMatrix<f64>>,
    psi_t_y: Vec<f64>,
}

impl<'a> SpProblem<'a> {
    fn new(psi: &'a DMatrix<f64>, y: &'a [f64], gram_limit: usize) -> Self {
        let yv = DVector::from_column_slice(y);
        let psi_t_y = psi.tr_mul(&yv).iter().copied().collect();
        let gram = (psi.ncols() <= gram_limit).then(|| psi.tr_mul(psi));
        Self {
            psi,
            y,
            norms: column_norms(psi),
            gram,
            psi_t_y,
        }
    }

    fn lsq(&self, cols: &[usize]) -> Vec<f64> {
        if let Some(g) = &self.gram {
            let k = cols.len();
            let sub = DMatrix::from_fn(k, k, |a, b| g[(cols[a], cols[b])]);
            if let Some(ch) = sub.cholesky() {
                let rhs = DVector::from_fn(k, |a, _| self.psi_t_y[cols[a]]);
                let c = ch.solve(&rhs);
                // ill-conditioned normal equations go through QR instead
                if c.iter().all(|v| v.is_finite()) && ch.l().diagonal().min() > 1e-4 * ch.l().diagonal().max() {
                    return c.iter().copied().collect();
                }
            }
        }
        linalg::ols(&linalg::columns(self.psi, cols), self.y)
            .map(|c| c.iter().copied().collect())
            .unwrap_or_else(|_| vec![0.0; cols.len()])
    }

    fn residual(&self, cols: &[usize], coef: &[f64]) -> Vec<f64> {
        let mut r = self.y.to_vec();
        for (&j, &c) in cols.iter().zip(coef) {
            for (ri, v) in r.iter_mut().zip(self.psi.column(j).iter()) {
                *ri -= c * v;
            }
        }
        r
    }

    fn fit(&self, support: Vec<usize>) -> SpFit {
        let mut support = support;
        support.sort_unstable();
        let coefficients = self.lsq(&support);
        let r = self.residual(&support, &coefficients);
        SpFit {
            support,
            coefficients,
            rss: dot(&r, &r),
            iterations: 0,
        }
    }

    fn normalized_scores(&self, v: &[f64], exclude: &[usize]) -> Vec<(usize, f64)> {
        let mut skip = vec![false; v.len()];
        for &j in exclude {
            skip[j] = true;
        }
        v.iter()
            .enumerate()
            .filter(|(j, _)| self.norms[*j] > 0.0 && !skip[*j])
            .map(|(j, c)| (j, c.abs() / self.norms[j]))
            .collect()
    }

    fn run(&self, k: usize, max_iter: usize) -> SpFit {
        let yy = dot(self.y, self.y);
        let mut cur = self.fit(top_k(&self.normalized_scores(&self.psi_t_y, &[]), k));
        for it in 0..max_iter {
            cur.iterations = it;
            if cur.rss <= (EXACT_FIT_RTOL * EXACT_FIT_RTOL) * yy {
                break;
            }
            let r = self.residual(&cur.support, &cur.coefficients);
            let corr: Vec<f64> = self
                .psi
                .tr_mul(&DVector::from_column_slice(&r))
                .iter()
                .copied()
                .collect();
            let mut cand = cur.support.clone();
            cand.extend(top_k(&self.normalized_scores(&corr, &cur.support), k));
            cand.sort_unstable();
            let c_cand = self.lsq(&cand);
            let mags: Vec<(usize, f64)> = cand.iter().zip(&c_cand).map(|(&j, c)| (j, c.abs())).collect();
            let next = self.fit(top_k(&mags, k));
            if next.rss >= cur.rss {
                break;
            }
            cur = next;
        }
        cur
    }
}

fn k_max_for(n: usize, p: usize) -> usize {
    (n / 2).min(p)
}

/// Subspace pursuit at fixed sparsity `k`.
pub fn subspace_pursuit(psi: &DMatrix<f64>, y: &[f64], k: usize, opts: &SolverOptions) -> Result<SpFit> {
    check_inputs(psi, y, 1)?;
    let max = k_max_for(psi.nrows(), psi.ncols());
    if k < 1 || k > max {
        return Err(PceError::SparsityOutOfRange { k, max });
    }
    Ok(SpProblem::new(psi, y, opts.gram_limit).run(k, opts.sp_max_iter))
}

/// Subspace pursuit with the sparsity chosen by modified LOO of the OLS refit.
pub fn sp_select_loo(psi: &DMatrix<f64>, y: &[f64], opts: &SolverOptions) -> Result<SparseSolution> {
    check_inputs(psi, y, 2)?;
    if dot(y, y) == 0.0 {
        return Ok(zero_solution(psi, SolverId::SpLoo, EstimateKind::ModifiedLoo));
    }
    let (n, p) = psi.shape();
    let prob = SpProblem::new(psi, y, opts.gram_limit);
    let yy = dot(y, y);
    let mut best: Option<SparseSolution> = None;
    for k in 1..=k_max_for(n, p) {
        let fit = prob.run(k, opts.sp_max_iter);
        let sol = refit_modified_loo(psi, y, fit.support, SolverId::SpLoo)?;
        let exact = fit.rss <= (EXACT_FIT_RTOL * EXACT_FIT_RTOL) * yy;
        if best
            .as_ref()
            .is_none_or(|b| sol.criterion.value < b.criterion.value)
        {
            best = Some(sol);
        }
        if exact {
            break;
        }
    }
    best.ok_or(PceError::NoValidBasis)
}

/// Subspace pursuit with the sparsity chosen by `folds`-fold cross-validation
/// of the SP refits.
pub fn sp_select_kfold(psi: &DMatrix<f64>, y: &[f64], folds: usize, opts: &SolverOptions) -> Result<SparseSolution> {
    check_inputs(psi, y, 2)?;
    let (n, p) = psi.shape();
    let folds = folds.clamp(2, n);
    let kind = EstimateKind::KFold(folds);
    if dot(y, y) == 0.0 {
        return Ok(zero_solution(psi, SolverId::SpK5, kind));
    }
    let var = sample_variance(y);
    let splits = fold_splits(&fold_assignment(n, folds, opts.cv_seed), folds);
    let min_train = splits.iter().map(|(tr, _)| tr.len()).min().unwrap_or(0);
    let k_max = k_max_for(min_train, p);
    if k_max == 0 {
        return Err(PceError::InvalidArgument(format!(
            "{folds}-fold subspace pursuit needs larger training folds than {min_train}"
        )));
    }

    struct Fold {
        psi: DMatrix<f64>,
        y: Vec<f64>,
        test_psi: DMatrix<f64>,
        test_y: Vec<f64>,
    }
    let data: Vec<Fold> = splits
        .iter()
        .map(|(tr, te)| Fold {
            psi: linalg::rows(psi, tr),
            y: tr.iter().map(|&i| y[i]).collect(),
            test_psi: linalg::rows(psi, te),
            test_y: te.iter().map(|&i| y[i]).collect(),
        })
        .collect();
    let problems: Vec<SpProblem<'_>> = data
        .iter()
        .map(|f| SpProblem::new(&f.psi, &f.y, opts.gram_limit))
        .collect();

    let mut best = (f64::INFINITY, 1usize);
    for k in 1..=k_max {
        let mut sse = 0.0;
        for (prob, f) in problems.iter().zip(&data) {
            let fit = prob.run(k, opts.sp_max_iter);
            for (i, &t) in f.test_y.iter().enumerate() {
                let pred: f64 = fit
                    .support
                    .iter()
                    .zip(&fit.coefficients)
                    .map(|(&j, c)| c * f.test_psi[(i, j)])
                    .sum();
                sse += (t - pred) * (t - pred);
            }
        }
        let score = if var > 0.0 { sse / n as f64 / var } else { f64::INFINITY };
        if score < best.0 {
            best = (score, k);
        }
        if score <= EXACT_FIT_RTOL * EXACT_FIT_RTOL {
            break;
        }
    }
    let k = best.1.min(k_max_for(n, p));
    let fit = SpProblem::new(psi, y, opts.gram_limit).run(k, opts.sp_max_iter);
    refit_with_criterion(psi, y, fit.support, ErrorEstimate::new(best.0, kind), SolverId::SpK5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_k1() {
        let psi = DMatrix::identity(3, 3);
        let fit = subspace_pursuit(&psi, &[0.0, 2.0, 0.0], 1, &SolverOptions::default()).unwrap();
        assert_eq!(fit.support, vec![1]);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sparsity_bounds() {
        let psi = DMatrix::from_fn(10, 8, |i, j| ((i * 8 + j) as f64).sin());
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let o = SolverOptions::default();
        assert!(subspace_pursuit(&psi, &y, 5, &o).is_ok());
        assert!(matches!(
            subspace_pursuit(&psi, &y, 6, &o),
            Err(PceError::SparsityOutOfRange { k: 6, max: 5 })
        ));
        assert!(subspace_pursuit(&psi, &y, 0, &o).is_err());
        let s = sp_select_loo(&psi, &y, &o).unwrap();
        assert!(s.active.len() <= 5);
    }
}
