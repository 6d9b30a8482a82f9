use std::collections::HashMap;

use super::{argmin_candidate, AdaptiveFit, AdaptivityTrace, FitContext, SchemeId};
use crate::error::{PceError, Result};
use crate::multi_index::{anisotropic_set_capped, hyperbolic_set_capped, MultiIndexSet};
use crate::surrogate::SparseSurrogate;

const OUTER: usize = 10;
const INNER: usize = 10;
const STRIKES: usize = 3;

/// Number of regressors dropped in inner iteration `i` (1-based):
/// `floor((i - 1) / 10 * n_active)`.
pub fn removal_count(i: usize, n_active: usize) -> usize {
    (i.saturating_sub(1) * n_active) / 10
}

/// Drops the `remove` terms with the smallest coefficient magnitude; among
/// equal magnitudes the higher total degree (then the later term) goes first.
pub fn restrict_smallest(active: &MultiIndexSet, coefficients: &[f64], remove: usize) -> MultiIndexSet {
    let mut order: Vec<usize> = (0..active.len()).collect();
    order.sort_by(|&a, &b| {
        coefficients[a]
            .abs()
            .total_cmp(&coefficients[b].abs())
            .then(active.get(b).total_degree().cmp(&active.get(a).total_degree()))
            .then(b.cmp(&a))
    });
    let mut keep: Vec<usize> = order.into_iter().skip(remove).collect();
    keep.sort_unstable();
    active.subset(&keep)
}

fn descriptor(p: &[u32]) -> String {
    let parts: Vec<String> = p.iter().map(u32::to_string).collect();
    format!("p=({})", parts.join(","))
}

/// Anisotropic-degree basis adaptivity (basis part of BASE-PC).
pub fn anisotropic_adaptive(ctx: &FitContext<'_>) -> Result<AdaptiveFit> {
    let d = ctx.dim();
    if d >= 20 {
        return Err(PceError::InvalidArgument(format!(
            "anisotropic-degree adaptivity is only run for d < 20 (d = {d})"
        )));
    }
    let cfg = ctx.config;
    let p0 = cfg.ad_initial_p.unwrap_or(cfg.p_range.1.div_ceil(2)).max(1);
    let initial = hyperbolic_set_capped(d, p0, 1.0, cfg.max_basis_size).ok_or_else(|| {
        PceError::InvalidArgument(format!(
            "initial total-degree basis p={p0} exceeds the maximum basis size {}",
            cfg.max_basis_size
        ))
    })?;

    let mut trace = AdaptivityTrace::default();
    let mut selected = ctx.fit(&initial, SchemeId::Ad)?;
    let first = trace.push_fit("initial".into(), format!("p={p0},q=1"), initial.len(), selected.criterion());
    let mut best = (selected.clone(), first);
    let mut cache: HashMap<Vec<u32>, SparseSurrogate> = HashMap::new();
    let mut prev_err = selected.criterion().value;
    let mut increases = 0;

    for o in 1..=OUTER {
        let active = selected.active().clone();
        let coefs = selected.coefficients().to_vec();
        let mut incumbent = selected.criterion().value;
        let mut strikes = 0;
        let mut cands: Vec<(SparseSurrogate, usize)> = Vec::new();
        for i in 1..=INNER {
            let label = format!("outer={o},inner={i}");
            let a_i = restrict_smallest(&active, &coefs, removal_count(i, active.len()));
            let mut p_new = if a_i.is_empty() { vec![0; d] } else { a_i.max_degrees() };
            p_new.resize(d, 0);
            for v in &mut p_new {
                *v += 1;
            }
            let desc = descriptor(&p_new);
            let fitted = match cache.get(&p_new) {
                Some(s) => Ok((s.clone(), true)),
                None => match anisotropic_set_capped(&p_new, cfg.max_basis_size) {
                    None => Err(format!("basis exceeds {} terms", cfg.max_basis_size)),
                    Some(set) => ctx
                        .fit(&set, SchemeId::Ad)
                        .map(|s| (s, false))
                        .map_err(|e| format!("solver failed: {e}")),
                },
            };
            match fitted {
                Err(note) => {
                    strikes += 1;
                    trace.push_skip(label, desc, format!("{note}; strike {strikes}"));
                }
                Ok((s, cached)) => {
                    cache.entry(p_new).or_insert_with(|| s.clone());
                    let e = trace.push_fit(label, desc, s.candidate_size(), s.criterion());
                    if cached {
                        trace.annotate(e, "same degree vector as an earlier iterate");
                    }
                    let err = s.criterion().value;
                    if err >= incumbent {
                        strikes += 1;
                        trace.annotate(e, format!("strike {strikes}"));
                    } else {
                        incumbent = err;
                    }
                    cands.push((s, e));
                }
            }
            if strikes >= STRIKES {
                break;
            }
        }
        let Some(k) = argmin_candidate(&cands) else {
            break;
        };
        let (s, e) = cands.swap_remove(k);
        let err = s.criterion().value;
        if err >= prev_err {
            increases += 1;
        } else {
            increases = 0;
        }
        prev_err = err;
        if err < best.0.criterion().value {
            best = (s.clone(), e);
        }
        selected = s;
        if increases >= STRIKES {
            trace.annotate(e, "error did not decrease three times in a row; stop");
            break;
        }
    }
    if !best.0.criterion().value.is_finite() {
        return Err(PceError::NoValidBasis);
    }
    trace.select(best.1);
    Ok(AdaptiveFit {
        surrogate: best.0,
        trace,
    })
}
