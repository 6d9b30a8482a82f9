//! Per-model adaptivity settings of the benchmark (initial bases and
//! degree/q-norm ranges), shipped as `data/settings.json`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::adaptivity::AdaptivityConfig;
use crate::error::{PceError, Result};

const SETTINGS_JSON: &str = include_str!("../../data/settings.json");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    /// Static-basis degree for the small and large ED.
    pub static_p: [u32; 2],
    pub static_q: f64,
    pub pq_p: [u32; 2],
    pub pq_q: Vec<f64>,
    /// Forward-neighbor initial degree for the small and large ED.
    pub fn_p: [u32; 2],
    pub fn_q: f64,
    pub ad_p: Option<u32>,
}

impl ModelSettings {
    /// Adaptivity configuration for one ED size, optionally capped at degree
    /// `p_cap` to bound the desk-scale runtime.
    pub fn config(&self, large: bool, p_cap: Option<u32>) -> AdaptivityConfig {
        let i = usize::from(large);
        let cap = |p: u32| p_cap.map_or(p, |c| p.min(c));
        let mut q_values = self.pq_q.clone();
        q_values.sort_by(f64::total_cmp);
        AdaptivityConfig {
            p_range: (self.pq_p[0].min(cap(self.pq_p[1])), cap(self.pq_p[1])),
            q_values,
            fn_initial_p: Some(cap(self.fn_p[i])),
            fn_initial_q: Some(self.fn_q),
            ad_initial_p: self.ad_p.map(cap),
            static_p: Some(cap(self.static_p[i])),
            static_q: Some(self.static_q),
            ..AdaptivityConfig::default()
        }
    }
}

pub fn all_settings() -> BTreeMap<String, ModelSettings> {
    serde_json::from_str(SETTINGS_JSON).expect("bundled settings are valid")
}

pub fn settings_for(model: &str) -> Result<ModelSettings> {
    all_settings()
        .remove(model)
        .ok_or_else(|| PceError::UnknownId(model.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptivity::static_basis;
    use crate::multi_index::hyperbolic_set;
    use crate::test_models::{by_id, MODEL_IDS};

    #[test]
    fn every_model_has_settings() {
        let all = all_settings();
        for id in MODEL_IDS {
            let s = &all[id];
            assert!(s.pq_p[0] <= s.pq_p[1]);
            assert_eq!(s.ad_p.is_none(), by_id(id).unwrap().d >= 20);
        }
    }

    #[test]
    fn ishigami_config() {
        let c = settings_for("ishigami").unwrap().config(true, None);
        assert_eq!(c.p_range, (1, 25));
        assert_eq!(c.fn_initial_p, Some(19));
        assert_eq!(c.static_p, Some(12));
        let c = settings_for("ishigami").unwrap().config(false, Some(14));
        assert_eq!(c.p_range, (1, 14));
        assert_eq!(c.fn_initial_p, Some(12));
        assert_eq!(c.ad_initial_p, Some(13));
    }

    #[test]
    fn static_degrees_follow_the_rule_for_ishigami() {
        let s = settings_for("ishigami").unwrap();
        let m = by_id("ishigami").unwrap();
        for (i, n) in [m.small_n, m.large_n].into_iter().enumerate() {
            let set = static_basis(3, n);
            assert_eq!(set, hyperbolic_set(3, s.static_p[i], 1.0));
        }
    }
}
