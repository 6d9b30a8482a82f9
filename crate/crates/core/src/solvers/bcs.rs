//! Bayesian compressive sensing with a Laplace prior (fast sequential
//! marginal-likelihood maximization of Babacan, Molina and Katsaggelos).
//!
//! The noise variance is held fixed at `eta * var(y)` for each grid value of
//! `eta`; the grid value is picked by k-fold cross-validation of the whole
//! procedure including the OLS refit.

use nalgebra::{DMatrix, DVector};

use super::{check_inputs, constant_column, refit_with_criterion, zero_solution, SolverId, SolverOptions, SparseSolution};
use crate::cv_error::{fold_assignment, fold_splits, ErrorEstimate, EstimateKind};
use crate::error::Result;
use crate::linalg::{self, dot, sample_variance};

const MAX_ITER: usize = 2000;
const REFRESH_EVERY: usize = 50;
const CONVERGENCE_RTOL: f64 = 1e-8;

/// Output of one FastLaplace run before any refit.
#[derive(Debug, Clone, PartialEq)]
pub struct FastLaplaceFit {
    /// Sorted active columns.
    pub active: Vec<usize>,
    /// Posterior means on `active`.
    pub mu: Vec<f64>,
    pub iterations: usize,
}

enum Action {
    Add,
    Reestimate(usize),
    Delete(usize),
}

struct State<'a> {
    psi: &'a DMatrix<f64>,
    beta: f64,
    diag: Vec<f64>,
    b: Vec<f64>,
    cache: Vec<Option<Vec<f64>>>,
    active: Vec<usize>,
    alpha: Vec<f64>,
    sigma: DMatrix<f64>,
    mu: Vec<f64>,
    s: Vec<f64>,
    q: Vec<f64>,
    lambda: f64,
}

impl<'a> State<'a> {
    fn gram_column(&mut self, m: usize) {
        if self.cache[m].is_none() {
            let col = self.psi.tr_mul(&self.psi.column(m));
            self.cache[m] = Some(col.iter().copied().collect());
        }
    }

    fn col(&self, m: usize) -> &[f64] {
        self.cache[m].as_deref().expect("cached Gram column")
    }

    /// Recomputes posterior moments and the S, Q statistics from scratch.
    fn refresh(&mut self) {
        let k = self.active.len();
        let p = self.diag.len();
        let mut h = DMatrix::from_fn(k, k, |i, j| self.beta * self.col(self.active[j])[self.active[i]]);
        for i in 0..k {
            h[(i, i)] += self.alpha[i];
        }
        self.sigma = match h.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => h.try_inverse().unwrap_or_else(|| DMatrix::zeros(k, k)),
        };
        let b_a = DVector::from_fn(k, |i, _| self.b[self.active[i]]);
        let mu = &self.sigma * b_a * self.beta;
        self.mu = mu.iter().copied().collect();
        let m = DMatrix::from_fn(p, k, |r, c| self.col(self.active[c])[r]);
        let t = &m * &self.sigma;
        for r in 0..p {
            let quad: f64 = (0..k).map(|c| t[(r, c)] * m[(r, c)]).sum();
            let lin: f64 = (0..k).map(|c| m[(r, c)] * self.mu[c]).sum();
            self.s[r] = self.beta * self.diag[r] - self.beta * self.beta * quad;
            self.q[r] = self.beta * self.b[r] - self.beta * lin;
        }
    }

    /// Weighted sum of the cached Gram columns of the active terms.
    fn combine(&self, w: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; self.diag.len()];
        for (l, &wl) in w.iter().enumerate() {
            if wl == 0.0 {
                continue;
            }
            for (ei, g) in e.iter_mut().zip(self.col(self.active[l])) {
                *ei += wl * g;
            }
        }
        e
    }

    fn ell(&self, gamma: f64, s: f64, q: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        let den = 1.0 + gamma * s;
        0.5 * (-den.ln() + q * q * gamma / den - self.lambda * gamma)
    }

    fn optimal_gamma(&self, s: f64, q: f64) -> f64 {
        let lam = self.lambda;
        if lam > 0.0 {
            let a = s + 2.0 * lam;
            let disc = a * a - 4.0 * lam * (s + lam - q * q);
            (-a + disc.max(0.0).sqrt()) / (2.0 * lam * s)
        } else {
            (q * q - s) / (s * s)
        }
    }

    /// Best single update and its likelihood gain.
    fn best_action(&self, n: usize) -> Option<(usize, Action, f64, f64)> {
        let mut best: Option<(usize, Action, f64, f64)> = None;
        let mut consider = |m: usize, act: Action, gain: f64, alpha: f64| {
            if gain.is_finite() && best.as_ref().is_none_or(|b| gain > b.2) {
                best = Some((m, act, gain, alpha));
            }
        };
        let mut pos = vec![usize::MAX; self.diag.len()];
        for (i, &m) in self.active.iter().enumerate() {
            pos[m] = i;
        }
        let can_add = self.active.len() + 1 < n;
        for m in 0..self.diag.len() {
            if self.diag[m] <= 0.0 {
                continue;
            }
            let (sm, qm) = (self.s[m], self.q[m]);
            if pos[m] == usize::MAX {
                if !can_add || sm <= 1e-12 * self.beta * self.diag[m] {
                    continue;
                }
                if qm * qm - sm > self.lambda {
                    let g = self.optimal_gamma(sm, qm);
                    if g > 0.0 {
                        consider(m, Action::Add, self.ell(g, sm, qm), 1.0 / g);
                    }
                }
            } else {
                let i = pos[m];
                let a = self.alpha[i];
                let den = a - sm;
                if den <= 0.0 {
                    continue;
                }
                let (s, q) = (a * sm / den, a * qm / den);
                let g_old = 1.0 / a;
                if q * q - s > self.lambda {
                    let g = self.optimal_gamma(s, q);
                    if g > 0.0 {
                        consider(m, Action::Reestimate(i), self.ell(g, s, q) - self.ell(g_old, s, q), 1.0 / g);
                    }
                } else if self.active.len() > 1 {
                    consider(m, Action::Delete(i), -self.ell(g_old, s, q), f64::INFINITY);
                }
            }
        }
        best
    }

    fn add(&mut self, m: usize, alpha_new: f64) {
        self.gram_column(m);
        let k = self.active.len();
        let beta = self.beta;
        let gm: Vec<f64> = self.col(m).to_vec();
        let g_am = DVector::from_fn(k, |l, _| gm[self.active[l]]);
        let z = &self.sigma * &g_am;
        let sii = 1.0 / (alpha_new + self.s[m]);
        let mui = sii * self.q[m];
        let comb = self.combine(z.as_slice());
        let e: Vec<f64> = gm.iter().zip(&comb).map(|(g, c)| beta * g - beta * beta * c).collect();

        let mut sigma = DMatrix::zeros(k + 1, k + 1);
        for i in 0..k {
            for j in 0..k {
                sigma[(i, j)] = self.sigma[(i, j)] + beta * beta * sii * z[i] * z[j];
            }
            sigma[(i, k)] = -beta * sii * z[i];
            sigma[(k, i)] = sigma[(i, k)];
        }
        sigma[(k, k)] = sii;
        for (l, ml) in self.mu.iter_mut().enumerate() {
            *ml -= beta * mui * z[l];
        }
        self.mu.push(mui);
        self.sigma = sigma;
        for ((sl, ql), el) in self.s.iter_mut().zip(self.q.iter_mut()).zip(&e) {
            *sl -= sii * el * el;
            *ql -= mui * el;
        }
        self.active.push(m);
        self.alpha.push(alpha_new);
    }

    fn reestimate(&mut self, j: usize, alpha_new: f64) {
        let k = self.active.len();
        let sj: Vec<f64> = (0..k).map(|l| self.sigma[(l, j)]).collect();
        let delta = alpha_new - self.alpha[j];
        let kappa = 1.0 / (self.sigma[(j, j)] + 1.0 / delta);
        let muj = self.mu[j];
        let e: Vec<f64> = self.combine(&sj).into_iter().map(|v| self.beta * v).collect();
        for a in 0..k {
            for b in 0..k {
                self.sigma[(a, b)] -= kappa * sj[a] * sj[b];
            }
            self.mu[a] -= kappa * muj * sj[a];
        }
        for ((sl, ql), el) in self.s.iter_mut().zip(self.q.iter_mut()).zip(&e) {
            *sl += kappa * el * el;
            *ql += kappa * muj * el;
        }
        self.alpha[j] = alpha_new;
    }

    fn delete(&mut self, j: usize) {
        let k = self.active.len();
        let sj: Vec<f64> = (0..k).map(|l| self.sigma[(l, j)]).collect();
        let sjj = sj[j];
        let muj = self.mu[j];
        let e: Vec<f64> = self.combine(&sj).into_iter().map(|v| self.beta * v).collect();
        for a in 0..k {
            for b in 0..k {
                self.sigma[(a, b)] -= sj[a] * sj[b] / sjj;
            }
            self.mu[a] -= muj / sjj * sj[a];
        }
        for ((sl, ql), el) in self.s.iter_mut().zip(self.q.iter_mut()).zip(&e) {
            *sl += el * el / sjj;
            *ql += muj / sjj * el;
        }
        self.sigma = self.sigma.clone().remove_row(j).remove_column(j);
        self.mu.remove(j);
        self.alpha.remove(j);
        self.active.remove(j);
    }
}

/// One FastLaplace run with fixed noise variance `sigma2`.
pub fn fast_laplace(psi: &DMatrix<f64>, y: &[f64], sigma2: f64) -> Result<FastLaplaceFit> {
    check_inputs(psi, y, 1)?;
    let (n, p) = psi.shape();
    let beta = 1.0 / sigma2.max(f64::MIN_POSITIVE);
    let diag: Vec<f64> = psi.column_iter().map(|c| c.norm_squared()).collect();
    let b: Vec<f64> = psi
        .tr_mul(&DVector::from_column_slice(y))
        .iter()
        .copied()
        .collect();

    let mut first: Option<(usize, f64)> = None;
    for m in 0..p {
        if diag[m] > 0.0 {
            let ratio = b[m] * b[m] / diag[m];
            if first.is_none_or(|(_, r)| ratio > r) {
                first = Some((m, ratio));
            }
        }
    }
    let Some((m0, ratio)) = first else {
        return Ok(FastLaplaceFit {
            active: Vec::new(),
            mu: Vec::new(),
            iterations: 0,
        });
    };
    if ratio == 0.0 {
        return Ok(FastLaplaceFit {
            active: Vec::new(),
            mu: Vec::new(),
            iterations: 0,
        });
    }
    let s0 = beta * diag[m0];
    let q0 = beta * b[m0];
    let g0 = ((q0 * q0 - s0) / (s0 * s0)).max(1e-6 * q0 * q0 / (s0 * s0));

    let mut st = State {
        psi,
        beta,
        diag,
        b,
        cache: vec![None; p],
        active: vec![m0],
        alpha: vec![1.0 / g0],
        sigma: DMatrix::zeros(1, 1),
        mu: vec![0.0],
        s: vec![0.0; p],
        q: vec![0.0; p],
        lambda: 0.0,
    };
    st.gram_column(m0);
    st.refresh();

    let mut total = 0.0f64;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let Some((m, action, gain, alpha_new)) = st.best_action(n) else {
            break;
        };
        if gain <= CONVERGENCE_RTOL * total.abs().max(1.0) {
            break;
        }
        total += gain;
        match action {
            Action::Add => st.add(m, alpha_new),
            Action::Reestimate(j) => st.reestimate(j, alpha_new),
            Action::Delete(j) => st.delete(j),
        }
        let k = st.active.len();
        let sum_gamma: f64 = st.alpha.iter().map(|a| 1.0 / a).sum();
        st.lambda = if k > 1 && sum_gamma > 0.0 {
            2.0 * (k - 1) as f64 / sum_gamma
        } else {
            0.0
        };
        if iterations % REFRESH_EVERY == 0 {
            st.refresh();
        }
    }
    st.refresh();

    let mut pairs: Vec<(usize, f64)> = st.active.iter().copied().zip(st.mu.iter().copied()).collect();
    pairs.sort_by_key(|&(j, _)| j);
    Ok(FastLaplaceFit {
        active: pairs.iter().map(|&(j, _)| j).collect(),
        mu: pairs.iter().map(|&(_, v)| v).collect(),
        iterations,
    })
}

/// FastLaplace followed by an OLS refit on its active set. Returns the active
/// set and the coefficients on it.
fn fit_and_refit(psi: &DMatrix<f64>, y: &[f64], sigma2: f64) -> Result<(Vec<usize>, Vec<f64>)> {
    let fl = fast_laplace(psi, y, sigma2)?;
    if fl.active.is_empty() || fl.active.len() >= psi.nrows() {
        return Ok((fl.active, fl.mu));
    }
    let c = linalg::ols(&linalg::columns(psi, &fl.active), y)?;
    Ok((fl.active, c.iter().copied().collect()))
}

/// BCS with the noise multiplier chosen by k-fold cross-validation.
pub fn bcs(psi: &DMatrix<f64>, y: &[f64], opts: &SolverOptions) -> Result<SparseSolution> {
    check_inputs(psi, y, 2)?;
    let n = psi.nrows();
    let folds = 10.min(n);
    let kind = EstimateKind::KFold(folds);
    if dot(y, y) == 0.0 {
        return Ok(zero_solution(psi, SolverId::Bcs, kind));
    }
    let var = sample_variance(y);
    if var == 0.0 {
        return Ok(match constant_column(psi) {
            Some(c) => refit_with_criterion(psi, y, vec![c], ErrorEstimate::degenerate(kind), SolverId::Bcs)?,
            None => zero_solution(psi, SolverId::Bcs, kind),
        });
    }

    let grid = &opts.bcs_eta_grid;
    let mut sse = vec![0.0; grid.len()];
    for (train, test) in fold_splits(&fold_assignment(n, folds, opts.cv_seed), folds) {
        let psi_tr = linalg::rows(psi, &train);
        let y_tr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        for (e, &eta) in grid.iter().enumerate() {
            let (act, coef) = fit_and_refit(&psi_tr, &y_tr, eta * var)?;
            for &i in &test {
                let pred: f64 = act.iter().zip(&coef).map(|(&j, c)| c * psi[(i, j)]).sum();
                sse[e] += (y[i] - pred) * (y[i] - pred);
            }
        }
    }
    let mut best = (f64::INFINITY, 0usize);
    for (e, &v) in sse.iter().enumerate() {
        let score = v / n as f64 / var;
        if score < best.0 {
            best = (score, e);
        }
    }
    let (active, _) = fit_and_refit(psi, y, grid[best.1] * var)?;
    let criterion = ErrorEstimate::new(best.0, kind);
    if active.len() >= n {
        let fl = fast_laplace(psi, y, grid[best.1] * var)?;
        let mut coefficients = vec![0.0; psi.ncols()];
        for (&j, &c) in fl.active.iter().zip(&fl.mu) {
            coefficients[j] = c;
        }
        return Ok(SparseSolution {
            coefficients,
            active: fl.active,
            criterion,
            solver: SolverId::Bcs,
        });
    }
    refit_with_criterion(psi, y, active, criterion, SolverId::Bcs)
}
