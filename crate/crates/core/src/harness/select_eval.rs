//! Evaluation of automatic selection criteria from campaign records: per ED
//! the selected candidate's validation error is compared with the oracle
//! minimum, using the same within-factor counting as [`aggregate`].
//!
//! [`aggregate`]: super::aggregate::aggregate

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::Serialize;

use crate::adaptivity::SchemeId;
use crate::auto_select::{select_from_scores, BenchmarkClass, CandidateScores, SelectionCriterion};
use crate::error::{PceError, Result};
use crate::sampling::derive_seed;
use crate::solvers::SolverId;

use super::aggregate::{best_error, check_factors, group_by_ed, Counter, WithinTable};
use super::campaign::label_of;
use super::records::BenchmarkRecord;

const PURPOSE_RANDOM_SELECTION: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePool {
    /// spk5, sploo and bcs with PQ, FN and AD (low-d) or static, PQ and FN (high-d).
    Standard,
    /// Every combination present in the records.
    All,
}

impl CandidatePool {
    pub fn contains(&self, class: BenchmarkClass, solver: SolverId, scheme: SchemeId) -> bool {
        match self {
            CandidatePool::All => true,
            CandidatePool::Standard => {
                let schemes = if class.is_high() {
                    [SchemeId::Static, SchemeId::Pq, SchemeId::Fn]
                } else {
                    [SchemeId::Pq, SchemeId::Fn, SchemeId::Ad]
                };
                matches!(solver, SolverId::SpK5 | SolverId::SpLoo | SolverId::Bcs) && schemes.contains(&scheme)
            }
        }
    }
}

impl fmt::Display for CandidatePool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidatePool::Standard => "candidates",
            CandidatePool::All => "all",
        })
    }
}

impl FromStr for CandidatePool {
    type Err = PceError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "candidates" | "standard" => Ok(CandidatePool::Standard),
            "all" => Ok(CandidatePool::All),
            _ => Err(PceError::UnknownId(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectEvalOptions {
    pub criteria: Vec<SelectionCriterion>,
    pub factors: Vec<f64>,
    pub candidate_pool: CandidatePool,
    /// Pool over which the per-ED reference minimum is taken.
    pub oracle_pool: CandidatePool,
    pub root_seed: u64,
}

impl Default for SelectEvalOptions {
    fn default() -> Self {
        Self {
            criteria: vec![
                SelectionCriterion::HybridModifiedLoo,
                SelectionCriterion::FixedRule,
                SelectionCriterion::Random(0),
                SelectionCriterion::Oracle,
            ],
            factors: super::aggregate::DEFAULT_FACTORS.to_vec(),
            candidate_pool: CandidatePool::Standard,
            oracle_pool: CandidatePool::Standard,
            root_seed: 0,
        }
    }
}

fn scores_of(r: &BenchmarkRecord) -> CandidateScores {
    let nan_inf = |v: Option<f64>| Some(v.unwrap_or(f64::INFINITY));
    CandidateScores {
        solver: r.solver,
        scheme: r.scheme,
        internal: r.criterion,
        hyb_loo: nan_inf(r.hyb_loo),
        hyb_modloo: nan_inf(r.hyb_modloo),
        hyb_kfold10: nan_inf(r.hyb_kfold10),
        rel_mse: Some(r.rel_mse),
    }
}

/// One selection on one ED.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionOutcome {
    pub model: String,
    pub n: usize,
    pub replication: usize,
    pub class: BenchmarkClass,
    pub criterion: String,
    pub solver: SolverId,
    pub scheme: SchemeId,
    pub rel_mse: f64,
    pub oracle_rel_mse: f64,
    pub fell_back: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectEvalResult {
    pub table: WithinTable,
    pub outcomes: Vec<SelectionOutcome>,
}

/// Selection-performance table with one row per (class, criterion).
/// `Random` criteria draw from a seed derived from the root seed, the ED and
/// the criterion's own seed.
pub fn select_eval(records: &[BenchmarkRecord], opts: &SelectEvalOptions) -> Result<SelectEvalResult> {
    let factors = check_factors(&opts.factors)?;
    if opts.criteria.is_empty() {
        return Err(PceError::InvalidArgument("no selection criteria given".into()));
    }
    let mut warnings = Vec::new();
    let mut outcomes = Vec::new();
    let mut counts: BTreeMap<(usize, usize), Counter> = BTreeMap::new();
    for (key, recs) in group_by_ed(records) {
        let class = recs[0].class();
        let cands: Vec<&BenchmarkRecord> = recs
            .iter()
            .copied()
            .filter(|r| opts.candidate_pool.contains(class, r.solver, r.scheme))
            .collect();
        let oracle = best_error(
            recs.iter()
                .copied()
                .filter(|r| opts.oracle_pool.contains(class, r.solver, r.scheme)),
        );
        let ed = format!("{} n={} rep={}", key.model, key.n, key.replication);
        let Some(eps) = oracle else {
            warnings.push(format!("{ed}: no finite validation error, ED skipped"));
            continue;
        };
        if cands.is_empty() {
            warnings.push(format!("{ed}: no candidates in the pool, ED skipped"));
            continue;
        }
        let scores: Vec<CandidateScores> = cands.iter().map(|r| scores_of(r)).collect();
        for (ci, &crit) in opts.criteria.iter().enumerate() {
            let crit = match crit {
                SelectionCriterion::Random(s) => SelectionCriterion::Random(derive_seed(
                    opts.root_seed,
                    &[
                        label_of(&key.model),
                        key.n as u64,
                        key.replication as u64,
                        PURPOSE_RANDOM_SELECTION,
                        s,
                    ],
                )),
                other => other,
            };
            let sel = match select_from_scores(&scores, crit, class) {
                Ok(s) => s,
                Err(e) => {
                    warnings.push(format!("{ed}: {} skipped: {e}", crit.name()));
                    continue;
                }
            };
            let chosen = cands[sel.index];
            counts
                .entry((class_index(class), ci))
                .or_default()
                .add(chosen.rel_mse, eps, &factors);
            outcomes.push(SelectionOutcome {
                model: key.model.clone(),
                n: key.n,
                replication: key.replication,
                class,
                criterion: opts.criteria[ci].to_string(),
                solver: chosen.solver,
                scheme: chosen.scheme,
                rel_mse: chosen.rel_mse,
                oracle_rel_mse: eps,
                fell_back: sel.fell_back,
            });
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    let rows = counts
        .iter()
        .map(|(&(c, ci), cnt)| cnt.row(BenchmarkClass::ALL[c], opts.criteria[ci].to_string(), factors.len()))
        .collect();
    Ok(SelectEvalResult {
        table: WithinTable {
            factors,
            rows,
            warnings,
        },
        outcomes,
    })
}

/// Writes `selection.csv` (the table) and `selection_outcomes.csv` into `dir`.
pub fn write_selection(dir: &std::path::Path, res: &SelectEvalResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("selection.csv"), res.table.to_csv())?;
    let mut w = csv::Writer::from_path(dir.join("selection_outcomes.csv"))?;
    for o in &res.outcomes {
        w.serialize(o)?;
    }
    w.flush()?;
    Ok(())
}

fn class_index(c: BenchmarkClass) -> usize {
    BenchmarkClass::ALL.iter().position(|&x| x == c).expect("listed")
}
