//! Within-factor tables: per ED realization the best validation error
//! `eps*` over all combinations, then per combination how often it attains
//! `eps*` or comes within a factor `f` of it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::adaptivity::SchemeId;
use crate::auto_select::BenchmarkClass;
use crate::error::{PceError, Result};
use crate::solvers::SolverId;

use super::records::{BenchmarkRecord, EdKey};

pub const DEFAULT_FACTORS: [f64; 3] = [2.0, 5.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct WithinRow {
    pub class: BenchmarkClass,
    /// Combination (`solver/scheme`) or selection-criterion label.
    pub label: String,
    pub runs: usize,
    pub best_pct: f64,
    /// Percentages in the order of the table's factors.
    pub within_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WithinTable {
    pub factors: Vec<f64>,
    pub rows: Vec<WithinRow>,
    pub warnings: Vec<String>,
}

impl WithinTable {
    pub fn row(&self, class: BenchmarkClass, label: &str) -> Option<&WithinRow> {
        self.rows.iter().find(|r| r.class == class && r.label == label)
    }

    /// CSV with columns `class, label, runs, best_pct, within_<f>...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,label,runs,best_pct");
        for f in &self.factors {
            s.push_str(&format!(",within_{f}"));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}", r.class, r.label, r.runs, r.best_pct));
            for p in &r.within_pct {
                s.push_str(&format!(",{p}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn combo_label(solver: SolverId, scheme: SchemeId) -> String {
    format!("{solver}/{scheme}")
}

pub(crate) fn check_factors(factors: &[f64]) -> Result<Vec<f64>> {
    if factors.is_empty() || factors.iter().any(|&f| !(f >= 1.0 && f.is_finite())) {
        return Err(PceError::InvalidArgument("factors must be finite and >= 1".into()));
    }
    let mut f = factors.to_vec();
    f.sort_by(f64::total_cmp);
    f.dedup();
    Ok(f)
}

/// Running counts of one table row.
#[derive(Debug, Clone, Default)]
pub(crate) struct Counter {
    pub runs: usize,
    pub best: usize,
    pub within: Vec<usize>,
}

impl Counter {
    pub fn add(&mut self, err: f64, eps: f64, factors: &[f64]) {
        self.within.resize(factors.len(), 0);
        self.runs += 1;
        if err == eps {
            self.best += 1;
        }
        for (c, f) in self.within.iter_mut().zip(factors) {
            if err <= f * eps {
                *c += 1;
            }
        }
    }

    pub fn row(&self, class: BenchmarkClass, label: String, nf: usize) -> WithinRow {
        let pct = |c: usize| 100.0 * c as f64 / self.runs as f64;
        let mut within = self.within.clone();
        within.resize(nf, 0);
        WithinRow {
            class,
            label,
            runs: self.runs,
            best_pct: pct(self.best),
            within_pct: within.into_iter().map(pct).collect(),
        }
    }
}

/// Records grouped by ED realization, in key order.
pub fn group_by_ed(records: &[BenchmarkRecord]) -> BTreeMap<EdKey, Vec<&BenchmarkRecord>> {
    let mut g: BTreeMap<EdKey, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        g.entry(r.ed_key()).or_default().push(r);
    }
    g
}

/// Smallest finite validation error, if any.
pub fn best_error<'a>(records: impl IntoIterator<Item = &'a BenchmarkRecord>) -> Option<f64> {
    records
        .into_iter()
        .map(|r| r.rel_mse)
        .filter(|e| e.is_finite())
        .min_by(f64::total_cmp)
}

/// Within-factor table per class. Rows are sorted by the smallest factor's
/// percentage, descending; ties keep the canonical (solver, scheme) order.
pub fn aggregate(records: &[BenchmarkRecord], factors: &[f64]) -> Result<WithinTable> {
    let factors = check_factors(factors)?;
    let groups = group_by_ed(records);
    if groups.is_empty() {
        return Err(PceError::InvalidArgument("no records to aggregate".into()));
    }
    let mut warnings = Vec::new();
    let mut combos_per_class: BTreeMap<&'static str, BTreeSet<(SolverId, SchemeId)>> = BTreeMap::new();
    for r in records {
        combos_per_class
            .entry(r.class().as_str())
            .or_default()
            .insert((r.solver, r.scheme));
    }
    let mut counts: BTreeMap<(&'static str, SolverId, SchemeId), Counter> = BTreeMap::new();
    for (key, recs) in &groups {
        let class = recs[0].class();
        let Some(eps) = best_error(recs.iter().copied()) else {
            warnings.push(format!(
                "{} n={} rep={}: no finite validation error, ED skipped",
                key.model, key.n, key.replication
            ));
            continue;
        };
        let present: BTreeSet<_> = recs.iter().map(|r| (r.solver, r.scheme)).collect();
        let expected = &combos_per_class[class.as_str()];
        if present.len() < expected.len() {
            let missing: Vec<String> = expected
                .difference(&present)
                .map(|&(s, k)| combo_label(s, k))
                .collect();
            warnings.push(format!(
                "{} n={} rep={}: missing {}",
                key.model,
                key.n,
                key.replication,
                missing.join(", ")
            ));
        }
        for r in recs {
            counts
                .entry((class.as_str(), r.solver, r.scheme))
                .or_default()
                .add(r.rel_mse, eps, &factors);
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    let mut rows = Vec::new();
    for class in BenchmarkClass::ALL {
        let mut class_rows: Vec<WithinRow> = counts
            .iter()
            .filter(|((c, _, _), _)| *c == class.as_str())
            .map(|((_, s, k), cnt)| cnt.row(class, combo_label(*s, *k), factors.len()))
            .collect();
        class_rows.sort_by(|a, b| b.within_pct[0].total_cmp(&a.within_pct[0]));
        rows.extend(class_rows);
    }
    Ok(WithinTable {
        factors,
        rows,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxplotRow {
    pub model: String,
    pub n: usize,
    pub solver: SolverId,
    pub scheme: SchemeId,
    pub count: usize,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Quantiles of the validation error per (model, N, solver, scheme).
pub fn boxplot_quantiles(records: &[BenchmarkRecord]) -> Vec<BoxplotRow> {
    let mut g: BTreeMap<(String, usize, SolverId, SchemeId), Vec<f64>> = BTreeMap::new();
    for r in records {
        g.entry((r.model.clone(), r.n, r.solver, r.scheme))
            .or_default()
            .push(r.rel_mse);
    }
    g.into_iter()
        .map(|((model, n, solver, scheme), mut v)| {
            v.sort_by(f64::total_cmp);
            BoxplotRow {
                model,
                n,
                solver,
                scheme,
                count: v.len(),
                min: v[0],
                q25: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q75: quantile(&v, 0.75),
                max: v[v.len() - 1],
            }
        })
        .collect()
}

/// Writes `within_factor.csv` and `boxplot_quantiles.csv` into `dir`.
pub fn write_tables(dir: &Path, table: &WithinTable, boxplots: &[BoxplotRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("within_factor.csv"), table.to_csv())?;
    let mut w = csv::Writer::from_path(dir.join("boxplot_quantiles.csv"))?;
    for b in boxplots {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}
