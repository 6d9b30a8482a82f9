//! Benchmark records and their CSV form.
//!
//! Column order: `model, d, n, ed_size, replication, solver, scheme,
//! design_fingerprint, rel_mse, criterion_kind, criterion, hyb_loo,
//! hyb_modloo, hyb_kfold10, basis_size, active_count, status, wall_time_s`.
//! Degenerate estimates are written as `inf`; absent values are empty.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptivity::SchemeId;
use crate::auto_select::{class_of, BenchmarkClass};
use crate::error::Result;
use crate::solvers::SolverId;

pub const CSV_COLUMNS: [&str; 18] = [
    "model",
    "d",
    "n",
    "ed_size",
    "replication",
    "solver",
    "scheme",
    "design_fingerprint",
    "rel_mse",
    "criterion_kind",
    "criterion",
    "hyb_loo",
    "hyb_modloo",
    "hyb_kfold10",
    "basis_size",
    "active_count",
    "status",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub model: String,
    pub d: usize,
    pub n: usize,
    /// `small`, `large` or `custom`.
    pub ed_size: String,
    pub replication: usize,
    pub solver: SolverId,
    pub scheme: SchemeId,
    pub design_fingerprint: String,
    pub rel_mse: f64,
    pub criterion_kind: String,
    pub criterion: f64,
    pub hyb_loo: Option<f64>,
    pub hyb_modloo: Option<f64>,
    pub hyb_kfold10: Option<f64>,
    pub basis_size: usize,
    pub active_count: usize,
    /// `ok` or `failed: <reason>`.
    pub status: String,
    pub wall_time_s: Option<f64>,
}

/// Identifies one experimental-design realization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdKey {
    pub model: String,
    pub n: usize,
    pub replication: usize,
}

/// Identifies one record.
pub type RecordKey = (EdKey, SolverId, SchemeId);

impl BenchmarkRecord {
    pub fn ed_key(&self) -> EdKey {
        EdKey {
            model: self.model.clone(),
            n: self.n,
            replication: self.replication,
        }
    }

    pub fn key(&self) -> RecordKey {
        (self.ed_key(), self.solver, self.scheme)
    }

    pub fn is_large(&self) -> bool {
        self.ed_size == "large"
    }

    pub fn class(&self) -> BenchmarkClass {
        class_of(self.d, self.is_large())
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn read_records(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

pub fn write_records(path: &Path, records: &[BenchmarkRecord]) -> Result<()> {
    let mut w = RecordWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

/// Appends records to a CSV file, writing the header only for a new file.
pub struct RecordWriter {
    inner: csv::Writer<File>,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut f = File::create(path)?;
        writeln!(f, "{}", CSV_COLUMNS.join(","))?;
        Self::wrap(f)
    }

    pub fn append_to(path: &Path) -> Result<Self> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        if fresh {
            return Self::create(path);
        }
        Self::wrap(OpenOptions::new().append(true).open(path)?)
    }

    fn wrap(f: File) -> Result<Self> {
        Ok(Self {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(f),
        })
    }

    /// Writes and flushes one record.
    pub fn append(&mut self, r: &BenchmarkRecord) -> Result<()> {
        self.inner.serialize(r)?;
        self.inner.flush()?;
        Ok(())
    }
}
