//! Campaign configuration, read from JSON (schema in `data/campaign.schema.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adaptivity::{AdaptivityConfig, SchemeId};
use crate::error::{PceError, Result};
use crate::solvers::SolverId;
use crate::test_models::{by_id, BenchmarkModel};

use super::settings::settings_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EdSize {
    Named(EdSizeName),
    Explicit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdSizeName {
    Small,
    Large,
}

impl EdSize {
    /// Number of points and whether it counts as the large ED. An explicit
    /// size is large when it is at least the midpoint of the model's sizes.
    pub fn resolve(&self, model: &BenchmarkModel) -> (usize, bool) {
        match self {
            EdSize::Named(EdSizeName::Small) => (model.small_n, false),
            EdSize::Named(EdSizeName::Large) => (model.large_n, true),
            EdSize::Explicit(n) => (*n, 2 * n >= model.small_n + model.large_n),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EdSize::Named(EdSizeName::Small) => "small",
            EdSize::Named(EdSizeName::Large) => "large",
            EdSize::Explicit(_) => "custom",
        }
    }
}

fn default_ed_sizes() -> Vec<EdSize> {
    vec![EdSize::Named(EdSizeName::Small), EdSize::Named(EdSizeName::Large)]
}

fn default_replications() -> usize {
    30
}

fn default_solvers() -> Vec<SolverId> {
    SolverId::ALL.to_vec()
}

fn default_schemes() -> Vec<SchemeId> {
    vec![SchemeId::Static, SchemeId::Pq, SchemeId::Fn, SchemeId::Ad]
}

fn default_restarts() -> usize {
    crate::sampling::DEFAULT_RESTARTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub models: Vec<String>,
    #[serde(default = "default_ed_sizes")]
    pub ed_sizes: Vec<EdSize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverId>,
    /// Anisotropic-degree adaptivity is skipped for models with `d >= 20`.
    #[serde(default = "default_schemes")]
    pub schemes: Vec<SchemeId>,
    /// Validation size; `10^5` (`10^4` for `d >= 50`) when absent.
    #[serde(default)]
    pub validation_n: Option<usize>,
    #[serde(default)]
    pub root_seed: u64,
    /// Selection criteria for `bench select`, as criterion strings.
    #[serde(default)]
    pub criteria: Vec<String>,
    /// Caps every degree of the per-model settings.
    #[serde(default)]
    pub p_cap: Option<u32>,
    #[serde(default)]
    pub max_basis_size: Option<usize>,
    #[serde(default = "default_restarts")]
    pub lhs_restarts: usize,
    /// Wall times make the record file non-reproducible; off by default.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Directory for the fitted surrogates, one JSON file per record.
    #[serde(default)]
    pub surrogate_dir: Option<PathBuf>,
}

impl CampaignConfig {
    pub fn new(models: Vec<String>) -> Self {
        Self {
            models,
            ed_sizes: default_ed_sizes(),
            replications: default_replications(),
            solvers: default_solvers(),
            schemes: default_schemes(),
            validation_n: None,
            root_seed: 0,
            criteria: Vec::new(),
            p_cap: None,
            max_basis_size: None,
            lhs_restarts: default_restarts(),
            record_wall_time: false,
            surrogate_dir: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.solvers.is_empty() || self.schemes.is_empty() || self.ed_sizes.is_empty() {
            return Err(PceError::InvalidArgument(
                "campaign needs at least one model, ED size, solver and scheme".into(),
            ));
        }
        if self.replications < 1 {
            return Err(PceError::InvalidArgument("replications must be >= 1".into()));
        }
        if self.lhs_restarts < 1 {
            return Err(PceError::InvalidArgument("lhs_restarts must be >= 1".into()));
        }
        for m in &self.models {
            let model = by_id(m)?;
            for s in &self.ed_sizes {
                let (n, _) = s.resolve(&model);
                if n < 2 {
                    return Err(PceError::InvalidArgument(format!("ED size {n} is too small")));
                }
            }
        }
        for c in &self.criteria {
            c.parse::<crate::auto_select::SelectionCriterion>()?;
        }
        Ok(())
    }

    pub fn validation_size(&self, d: usize) -> usize {
        self.validation_n
            .unwrap_or(if d >= 50 { 10_000 } else { 100_000 })
    }

    /// Schemes run for a model of dimension `d`.
    pub fn schemes_for(&self, d: usize) -> Vec<SchemeId> {
        self.schemes
            .iter()
            .copied()
            .filter(|&s| !(s == SchemeId::Ad && d >= 20))
            .collect()
    }

    pub fn adaptivity(&self, model: &BenchmarkModel, large: bool) -> AdaptivityConfig {
        let mut cfg = match settings_for(model.id) {
            Ok(s) => s.config(large, self.p_cap),
            Err(_) => AdaptivityConfig::for_dimension(model.d),
        };
        if let Some(m) = self.max_basis_size {
            cfg.max_basis_size = m;
        }
        cfg
    }

    /// SHA-256 of the canonical JSON form, hex encoded (first 16 chars).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("serializable");
        let digest = format!("{:x}", Sha256::digest(json.as_bytes()));
        digest[..16].to_string()
    }
}
