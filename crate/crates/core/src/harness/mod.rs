//! Benchmark harness: campaign configuration and execution, CSV records,
//! within-factor aggregation and evaluation of selection criteria.

pub mod aggregate;
pub mod campaign;
pub mod config;
pub mod records;
pub mod select_eval;
pub mod settings;

pub use aggregate::{aggregate, boxplot_quantiles, write_tables, WithinRow, WithinTable, DEFAULT_FACTORS};
pub use campaign::{run_campaign, worker_count, WORKERS_ENV};
pub use config::{CampaignConfig, EdSize, EdSizeName};
pub use records::{read_records, write_records, BenchmarkRecord, EdKey, RecordWriter, CSV_COLUMNS};
pub use select_eval::{select_eval, CandidatePool, SelectEvalOptions, SelectEvalResult, SelectionOutcome, write_selection};
pub use settings::{settings_for, ModelSettings};
