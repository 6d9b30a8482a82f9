//! Final selection among surrogates fitted by different (solver, scheme)
//! combinations on the same experimental design.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptivity::SchemeId;
use crate::cv_error::{rel_mse, EstimateKind};
use crate::error::{PceError, Result};
use crate::sampling::Design;
use crate::solvers::SolverId;
use crate::surrogate::{hybrid_estimate, SparseSurrogate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionCriterion {
    SolverInternal,
    HybridLoo,
    HybridModifiedLoo,
    HybridKFold10,
    FixedRule,
    Random(u64),
    /// Needs a validation design in the selection context.
    Oracle,
}

impl SelectionCriterion {
    /// Name without the random seed.
    pub fn name(&self) -> &'static str {
        match self {
            SelectionCriterion::SolverInternal => "internal",
            SelectionCriterion::HybridLoo => "hyb_loo",
            SelectionCriterion::HybridModifiedLoo => "hyb_modloo",
            SelectionCriterion::HybridKFold10 => "hyb_kfold10",
            SelectionCriterion::FixedRule => "fixed",
            SelectionCriterion::Random(_) => "random",
            SelectionCriterion::Oracle => "oracle",
        }
    }

    pub fn hybrid_kind(&self) -> Option<EstimateKind> {
        match self {
            SelectionCriterion::HybridLoo => Some(EstimateKind::HybridLoo),
            SelectionCriterion::HybridModifiedLoo => Some(EstimateKind::HybridModifiedLoo),
            SelectionCriterion::HybridKFold10 => Some(EstimateKind::HybridKFold(10)),
            _ => None,
        }
    }
}

impl fmt::Display for SelectionCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionCriterion::Random(seed) => write!(f, "random:{seed}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SelectionCriterion {
    type Err = PceError;

    /// `random` alone uses seed 0; `random:<seed>` sets it.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "internal" => Self::SolverInternal,
            "hyb_loo" => Self::HybridLoo,
            "hyb_modloo" => Self::HybridModifiedLoo,
            "hyb_kfold10" => Self::HybridKFold10,
            "fixed" => Self::FixedRule,
            "random" => Self::Random(0),
            "oracle" => Self::Oracle,
            _ => match s.strip_prefix("random:").and_then(|r| r.parse().ok()) {
                Some(seed) => Self::Random(seed),
                None => return Err(PceError::UnknownId(s.to_string())),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkClass {
    LowSmall,
    LowLarge,
    HighSmall,
    HighLarge,
}

impl BenchmarkClass {
    pub const ALL: [BenchmarkClass; 4] = [
        BenchmarkClass::LowSmall,
        BenchmarkClass::LowLarge,
        BenchmarkClass::HighSmall,
        BenchmarkClass::HighLarge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BenchmarkClass::LowSmall => "low_small",
            BenchmarkClass::LowLarge => "low_large",
            BenchmarkClass::HighSmall => "high_small",
            BenchmarkClass::HighLarge => "high_large",
        }
    }

    pub fn is_high(&self) -> bool {
        matches!(self, BenchmarkClass::HighSmall | BenchmarkClass::HighLarge)
    }

    /// Combination picked by the fixed rule.
    pub fn fixed_rule(&self) -> (SolverId, SchemeId) {
        match self {
            BenchmarkClass::LowSmall => (SolverId::Bcs, SchemeId::Fn),
            BenchmarkClass::LowLarge => (SolverId::SpLoo, SchemeId::Fn),
            BenchmarkClass::HighSmall | BenchmarkClass::HighLarge => (SolverId::SpK5, SchemeId::Fn),
        }
    }
}

impl fmt::Display for BenchmarkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `d <= 10` is low-dimensional and `d >= 20` high-dimensional; dimensions
/// in between are treated as low-dimensional with a warning.
pub fn class_of(d: usize, large: bool) -> BenchmarkClass {
    if (11..20).contains(&d) {
        warn!("d = {d} lies between the low- and high-dimensional classes; treating it as low-dimensional");
    }
    match (d >= 20, large) {
        (false, false) => BenchmarkClass::LowSmall,
        (false, true) => BenchmarkClass::LowLarge,
        (true, false) => BenchmarkClass::HighSmall,
        (true, true) => BenchmarkClass::HighLarge,
    }
}

/// Precomputed scores of one candidate. Missing values are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScores {
    pub solver: SolverId,
    pub scheme: SchemeId,
    pub internal: f64,
    pub hyb_loo: Option<f64>,
    pub hyb_modloo: Option<f64>,
    pub hyb_kfold10: Option<f64>,
    pub rel_mse: Option<f64>,
}

impl CandidateScores {
    fn hybrid(&self, c: SelectionCriterion) -> Option<f64> {
        match c {
            SelectionCriterion::HybridLoo => self.hyb_loo,
            SelectionCriterion::HybridModifiedLoo => self.hyb_modloo,
            SelectionCriterion::HybridKFold10 => self.hyb_kfold10,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub solver: SolverId,
    pub scheme: SchemeId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub scores: Vec<ScoreRow>,
    /// Every hybrid score was degenerate and the solver criterion was used.
    pub fell_back: bool,
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Selection from precomputed scores. Lowest score wins; ties go to the
/// first candidate in canonical (solver, scheme) order.
pub fn select_from_scores(
    cands: &[CandidateScores],
    criterion: SelectionCriterion,
    class: BenchmarkClass,
) -> Result<Selection> {
    if cands.is_empty() {
        return Err(PceError::InvalidArgument("no candidates to select from".into()));
    }
    let mut fell_back = false;
    let scores: Vec<f64> = match criterion {
        SelectionCriterion::SolverInternal => cands.iter().map(|c| c.internal).collect(),
        SelectionCriterion::HybridLoo | SelectionCriterion::HybridModifiedLoo | SelectionCriterion::HybridKFold10 => {
            let s: Vec<f64> = cands
                .iter()
                .map(|c| c.hybrid(criterion).unwrap_or(f64::INFINITY))
                .collect();
            if s.iter().all(|v| !v.is_finite()) {
                warn!("all {criterion} scores are degenerate; falling back to the solver criterion");
                fell_back = true;
                cands.iter().map(|c| c.internal).collect()
            } else {
                s
            }
        }
        SelectionCriterion::Oracle => cands
            .iter()
            .map(|c| {
                c.rel_mse
                    .ok_or_else(|| PceError::InvalidArgument("oracle selection needs validation errors".into()))
            })
            .collect::<Result<_>>()?,
        SelectionCriterion::FixedRule => {
            let target = class.fixed_rule();
            if !cands.iter().any(|c| (c.solver, c.scheme) == target) {
                return Err(PceError::MissingCombination {
                    solver: target.0.to_string(),
                    scheme: target.1.to_string(),
                });
            }
            cands
                .iter()
                .map(|c| if (c.solver, c.scheme) == target { 0.0 } else { f64::INFINITY })
                .collect()
        }
        SelectionCriterion::Random(seed) => {
            let pick = ChaCha8Rng::seed_from_u64(seed).random_range(0..cands.len());
            (0..cands.len()).map(|i| if i == pick { 0.0 } else { f64::INFINITY }).collect()
        }
    };
    let scores: Vec<f64> = scores.into_iter().map(nan_to_inf).collect();
    let index = (0..cands.len())
        .min_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then((cands[a].solver, cands[a].scheme).cmp(&(cands[b].solver, cands[b].scheme)))
                .then(a.cmp(&b))
        })
        .expect("non-empty");
    let scores = cands
        .iter()
        .zip(&scores)
        .map(|(c, &score)| ScoreRow {
            solver: c.solver,
            scheme: c.scheme,
            score,
        })
        .collect();
    Ok(Selection {
        index,
        scores,
        fell_back,
    })
}

/// Selection context: the training design all candidates were fitted on,
/// its size class and an optional validation design for the oracle.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub design: &'a Design,
    pub large: bool,
    pub validation: Option<&'a Design>,
}

/// Scores every candidate under `criterion` and returns the selection.
pub fn auto_select(
    candidates: &[SparseSurrogate],
    criterion: SelectionCriterion,
    ctx: &SelectionContext<'_>,
) -> Result<Selection> {
    let Some(first) = candidates.first() else {
        return Err(PceError::InvalidArgument("no candidates to select from".into()));
    };
    let fp = ctx.design.fingerprint();
    for (i, c) in candidates.iter().enumerate() {
        if c.provenance().design_fingerprint != fp {
            return Err(PceError::DesignMismatch { index: i });
        }
    }
    if criterion == SelectionCriterion::Oracle && ctx.validation.is_none() {
        return Err(PceError::InvalidArgument("oracle selection needs a validation design".into()));
    }
    let hybrid = criterion.hybrid_kind();
    let truth = match ctx.validation {
        Some(v) if criterion == SelectionCriterion::Oracle => Some(v.responses()?),
        _ => None,
    };
    let scores = candidates
        .iter()
        .map(|c| {
            let h = match hybrid {
                Some(kind) => Some(hybrid_estimate(kind, c, ctx.design)?.value),
                None => None,
            };
            let rel = match (truth, ctx.validation) {
                (Some(t), Some(v)) => Some(rel_mse(&c.predict(&v.physical)?, t)?.value),
                _ => None,
            };
            Ok(CandidateScores {
                solver: c.provenance().solver,
                scheme: c.provenance().scheme,
                internal: c.criterion().value,
                hyb_loo: h.filter(|_| criterion == SelectionCriterion::HybridLoo),
                hyb_modloo: h.filter(|_| criterion == SelectionCriterion::HybridModifiedLoo),
                hyb_kfold10: h.filter(|_| criterion == SelectionCriterion::HybridKFold10),
                rel_mse: rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    select_from_scores(&scores, criterion, class_of(first.dim(), ctx.large))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(solver: SolverId, scheme: SchemeId, internal: f64, rel: f64) -> CandidateScores {
        CandidateScores {
            solver,
            scheme,
            internal,
            hyb_loo: None,
            hyb_modloo: None,
            hyb_kfold10: None,
            rel_mse: Some(rel),
        }
    }

    #[test]
    fn oracle_picks_argmin() {
        let c = vec![
            cand(SolverId::Omp, SchemeId::Pq, 1.0, 0.1),
            cand(SolverId::SpLoo, SchemeId::Pq, 1.0, 0.01),
            cand(SolverId::Bcs, SchemeId::Pq, 1.0, 0.5),
        ];
        let s = select_from_scores(&c, SelectionCriterion::Oracle, BenchmarkClass::LowSmall).unwrap();
        assert_eq!(s.index, 1);
        let min = s.scores.iter().map(|r| r.score).fold(f64::INFINITY, f64::min);
        assert_eq!(s.scores[s.index].score, min);
    }

    #[test]
    fn single_candidate() {
        let c = vec![cand(SolverId::Bcs, SchemeId::Fn, 0.3, 0.2)];
        for crit in [
            SelectionCriterion::SolverInternal,
            SelectionCriterion::HybridModifiedLoo,
            SelectionCriterion::FixedRule,
            SelectionCriterion::Random(7),
            SelectionCriterion::Oracle,
        ] {
            assert_eq!(select_from_scores(&c, crit, BenchmarkClass::LowSmall).unwrap().index, 0);
        }
    }

    #[test]
    fn hybrid_fallback_and_ties() {
        let c = vec![
            cand(SolverId::Bcs, SchemeId::Fn, 0.3, 0.2),
            cand(SolverId::Omp, SchemeId::Fn, 0.3, 0.2),
        ];
        let s = select_from_scores(&c, SelectionCriterion::HybridLoo, BenchmarkClass::LowSmall).unwrap();
        assert!(s.fell_back);
        // tie on the internal score goes to omp, which comes first canonically
        assert_eq!(s.index, 1);
    }

    #[test]
    fn fixed_rule() {
        let c = vec![
            cand(SolverId::SpK5, SchemeId::Fn, 0.3, 0.2),
            cand(SolverId::SpLoo, SchemeId::Fn, 0.1, 0.2),
            cand(SolverId::Bcs, SchemeId::Fn, 0.2, 0.2),
        ];
        let pick = |class| select_from_scores(&c, SelectionCriterion::FixedRule, class).unwrap().index;
        assert_eq!(pick(BenchmarkClass::LowSmall), 2);
        assert_eq!(pick(BenchmarkClass::LowLarge), 1);
        assert_eq!(pick(BenchmarkClass::HighSmall), 0);
        assert_eq!(pick(BenchmarkClass::HighLarge), 0);
        let err = select_from_scores(&c[..1], SelectionCriterion::FixedRule, BenchmarkClass::LowSmall).unwrap_err();
        assert!(err.to_string().contains("bcs"));
    }

    #[test]
    fn random_is_reproducible() {
        let c: Vec<_> = SolverId::ALL.iter().map(|&s| cand(s, SchemeId::Pq, 1.0, 1.0)).collect();
        let a = select_from_scores(&c, SelectionCriterion::Random(11), BenchmarkClass::LowSmall).unwrap();
        let b = select_from_scores(&c, SelectionCriterion::Random(11), BenchmarkClass::LowSmall).unwrap();
        assert_eq!(a.index, b.index);
    }

    #[test]
    fn classes() {
        assert_eq!(class_of(3, false), BenchmarkClass::LowSmall);
        assert_eq!(class_of(20, true), BenchmarkClass::HighLarge);
        assert_eq!(class_of(15, false), BenchmarkClass::LowSmall);
        assert_eq!(class_of(15, true), BenchmarkClass::LowLarge);
        assert_eq!(class_of(10, true), BenchmarkClass::LowLarge);
    }

    #[test]
    fn criterion_strings() {
        for s in ["internal", "hyb_loo", "hyb_modloo", "hyb_kfold10", "fixed", "oracle", "random:5"] {
            let c: SelectionCriterion = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert_eq!("random".parse::<SelectionCriterion>().unwrap(), SelectionCriterion::Random(0));
        assert!("best".parse::<SelectionCriterion>().is_err());
    }
}
