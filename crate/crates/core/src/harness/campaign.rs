//! Campaign execution: for every (model, ED size, replication) one maximin
//! LHS design and one validation sample, then every (solver, scheme) fit on
//! that same design.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use log::{info, warn};

use crate::adaptivity::{fit_adaptive, SchemeId};
use crate::cv_error::{rel_mse, EstimateKind};
use crate::error::Result;
use crate::sampling::{derive_seed, iid_sample, lhs_maximin, Design};
use crate::solvers::SolverId;
use crate::surrogate::{hybrid_estimate, SparseSurrogate};
use crate::test_models::{by_id, BenchmarkModel};

use super::config::{CampaignConfig, EdSize};
use super::records::{read_records, BenchmarkRecord, RecordKey, RecordWriter};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "PCE_WORKERS";

const PURPOSE_DESIGN: u64 = 0;
const PURPOSE_VALIDATION: u64 = 1;

/// Stable 64-bit label of a string (FNV-1a).
pub fn label_of(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn design_seed(root: u64, model: &str, n: usize, replication: usize) -> u64 {
    derive_seed(root, &[label_of(model), n as u64, replication as u64, PURPOSE_DESIGN])
}

pub fn validation_seed(root: u64, model: &str, n: usize, replication: usize) -> u64 {
    derive_seed(root, &[label_of(model), n as u64, replication as u64, PURPOSE_VALIDATION])
}

/// Worker count from `PCE_WORKERS`, defaulting to the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One (model, ED size, replication) cell of the campaign.
#[derive(Debug, Clone)]
pub struct Cell {
    pub model: BenchmarkModel,
    pub ed_size: EdSize,
    pub n: usize,
    pub large: bool,
    pub replication: usize,
}

/// Cells in canonical order: model, ED size, replication.
pub fn cells(config: &CampaignConfig) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for id in &config.models {
        let model = by_id(id)?;
        for &ed_size in &config.ed_sizes {
            let (n, large) = ed_size.resolve(&model);
            for replication in 0..config.replications {
                out.push(Cell {
                    model: model.clone(),
                    ed_size,
                    n,
                    large,
                    replication,
                });
            }
        }
    }
    Ok(out)
}

/// Training and validation designs of a cell, both evaluated.
pub fn cell_designs(config: &CampaignConfig, cell: &Cell) -> Result<(Design, Design)> {
    let m = &cell.model;
    let seed = design_seed(config.root_seed, m.id, cell.n, cell.replication);
    let design = lhs_maximin(&m.input_model, cell.n, seed, config.lhs_restarts)?;
    let design = design.evaluate(|x| m.evaluate_unchecked(x));
    let vseed = validation_seed(config.root_seed, m.id, cell.n, cell.replication);
    let validation = iid_sample(config.validation_size(m.d), &m.input_model, vseed)?;
    let validation = validation.evaluate(|x| m.evaluate_unchecked(x));
    Ok((design, validation))
}

fn combos(config: &CampaignConfig, d: usize) -> Vec<(SolverId, SchemeId)> {
    let schemes = config.schemes_for(d);
    config
        .solvers
        .iter()
        .flat_map(|&s| schemes.iter().map(move |&k| (s, k)))
        .collect()
}

fn hybrid_value(kind: EstimateKind, s: &SparseSurrogate, design: &Design) -> Option<f64> {
    hybrid_estimate(kind, s, design).ok().map(|e| e.value)
}

/// Fits one (solver, scheme) combination on the cell's design.
pub fn run_combination(
    config: &CampaignConfig,
    cell: &Cell,
    design: &Design,
    validation: &Design,
    solver: SolverId,
    scheme: SchemeId,
) -> (BenchmarkRecord, Option<SparseSurrogate>) {
    let m = &cell.model;
    let start = Instant::now();
    let adapt = config.adaptivity(m, cell.large);
    let fitted = fit_adaptive(scheme, solver, &m.input_model, design, &adapt).and_then(|fit| {
        let pred = fit.surrogate.predict(&validation.physical)?;
        let err = rel_mse(&pred, validation.responses()?)?;
        Ok((fit.surrogate, err.value))
    });
    let mut rec = BenchmarkRecord {
        model: m.id.to_string(),
        d: m.d,
        n: cell.n,
        ed_size: cell.ed_size.label().to_string(),
        replication: cell.replication,
        solver,
        scheme,
        design_fingerprint: design.fingerprint(),
        rel_mse: f64::INFINITY,
        criterion_kind: solver.criterion_kind(cell.n).to_string(),
        criterion: f64::INFINITY,
        hyb_loo: None,
        hyb_modloo: None,
        hyb_kfold10: None,
        basis_size: 0,
        active_count: 0,
        status: "ok".into(),
        wall_time_s: None,
    };
    let surrogate = match fitted {
        Ok((mut s, err)) => {
            s.set_config_hash(config.hash());
            rec.rel_mse = err;
            rec.criterion_kind = s.criterion().kind.to_string();
            rec.criterion = s.criterion().value;
            rec.hyb_loo = hybrid_value(EstimateKind::HybridLoo, &s, design);
            rec.hyb_modloo = hybrid_value(EstimateKind::HybridModifiedLoo, &s, design);
            rec.hyb_kfold10 = hybrid_value(EstimateKind::HybridKFold(10), &s, design);
            rec.basis_size = s.candidate_size();
            rec.active_count = s.active_count();
            Some(s)
        }
        Err(e) => {
            warn!("{} n={} rep={} {solver}/{scheme} failed: {e}", m.id, cell.n, cell.replication);
            rec.status = format!("failed: {e}");
            None
        }
    };
    if config.record_wall_time {
        rec.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    (rec, surrogate)
}

/// File name of a persisted candidate surrogate.
pub fn surrogate_file_name(rec: &BenchmarkRecord) -> String {
    format!(
        "{}_n{}_r{}_{}_{}.json",
        rec.model, rec.n, rec.replication, rec.solver, rec.scheme
    )
}

/// Runs all combinations of one cell that are not in `done`.
pub fn run_cell(config: &CampaignConfig, cell: &Cell, done: &HashSet<RecordKey>) -> Result<Vec<BenchmarkRecord>> {
    let todo: Vec<_> = combos(config, cell.model.d)
        .into_iter()
        .filter(|&(s, k)| {
            let key = (
                super::records::EdKey {
                    model: cell.model.id.to_string(),
                    n: cell.n,
                    replication: cell.replication,
                },
                s,
                k,
            );
            !done.contains(&key)
        })
        .collect();
    if todo.is_empty() {
        return Ok(Vec::new());
    }
    let (design, validation) = cell_designs(config, cell)?;
    let mut out = Vec::with_capacity(todo.len());
    for (solver, scheme) in todo {
        let (rec, s) = run_combination(config, cell, &design, &validation, solver, scheme);
        if let (Some(dir), Some(s)) = (&config.surrogate_dir, s) {
            std::fs::create_dir_all(dir)?;
            s.save(&dir.join(surrogate_file_name(&rec)))?;
        }
        out.push(rec);
    }
    info!(
        "{} n={} rep={}: {} records",
        cell.model.id,
        cell.n,
        cell.replication,
        out.len()
    );
    Ok(out)
}

/// Runs the campaign, appending records to `out` in canonical order.
/// Records already present in `out` are kept and not recomputed.
pub fn run_campaign(config: &CampaignConfig, out: &Path) -> Result<Vec<BenchmarkRecord>> {
    config.validate()?;
    let existing = if out.exists() && std::fs::metadata(out)?.len() > 0 {
        read_records(out)?
    } else {
        Vec::new()
    };
    let done: HashSet<RecordKey> = existing.iter().map(BenchmarkRecord::key).collect();
    let cells = cells(config)?;
    let mut writer = RecordWriter::append_to(out)?;
    let mut all = existing;

    let workers = worker_count().min(cells.len()).max(1);
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<Vec<BenchmarkRecord>>)>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, cells, done) = (&next, &cells, &done);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                if tx.send((i, run_cell(config, &cells[i], done))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // single appender; results are written in cell order
        let mut pending = BTreeMap::new();
        let mut expected = 0;
        for (i, res) in rx {
            pending.insert(i, res);
            while let Some(res) = pending.remove(&expected) {
                for r in res? {
                    writer.append(&r)?;
                    all.push(r);
                }
                expected += 1;
            }
        }
        Ok(())
    })?;
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_per_stream() {
        let a = design_seed(0, "ishigami", 50, 0);
        assert_ne!(a, design_seed(0, "ishigami", 50, 1));
        assert_ne!(a, design_seed(0, "ishigami", 150, 0));
        assert_ne!(a, design_seed(0, "borehole", 50, 0));
        assert_ne!(a, design_seed(1, "ishigami", 50, 0));
        assert_ne!(a, validation_seed(0, "ishigami", 50, 0));
        assert_eq!(a, design_seed(0, "ishigami", 50, 0));
    }

    #[test]
    fn cell_order() {
        let mut c = CampaignConfig::new(vec!["ishigami".into(), "borehole".into()]);
        c.replications = 2;
        let cs = cells(&c).unwrap();
        assert_eq!(cs.len(), 8);
        assert_eq!((cs[0].model.id, cs[0].n, cs[0].replication), ("ishigami", 50, 0));
        assert_eq!((cs[3].model.id, cs[3].n, cs[3].replication), ("ishigami", 150, 1));
        assert_eq!(cs[4].model.id, "borehole");
    }
}
