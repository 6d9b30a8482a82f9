use log::debug;

use super::{argmin_candidate, AdaptiveFit, AdaptivityTrace, FitContext, SchemeId};
use crate::error::{PceError, Result};
use crate::multi_index::{hyperbolic_set_capped, MultiIndexSet};
use crate::surrogate::SparseSurrogate;

/// Degree & q-norm adaptivity: fits every hyperbolic basis of the grid
/// (degree ascending, q ascending) and keeps the one with the smallest
/// solver criterion.
pub fn pq_adaptive(ctx: &FitContext<'_>) -> Result<AdaptiveFit> {
    let d = ctx.dim();
    let (p_lo, p_hi) = ctx.config.p_range;
    let mut qs = ctx.config.q_values.clone();
    qs.sort_by(f64::total_cmp);
    qs.dedup();

    let mut trace = AdaptivityTrace::default();
    let mut cands: Vec<(SparseSurrogate, usize)> = Vec::new();
    // several (p, q) pairs can generate the same set; fit each set once
    let mut fitted: Vec<(MultiIndexSet, usize)> = Vec::new();
    let mut too_big = vec![false; qs.len()];
    for p in p_lo..=p_hi {
        for (qi, &q) in qs.iter().enumerate() {
            let label = format!("p={p},q={q}");
            let set = if too_big[qi] {
                None
            } else {
                hyperbolic_set_capped(d, p, q, ctx.config.max_basis_size)
            };
            let Some(set) = set else {
                too_big[qi] = true;
                trace.push_skip(label.clone(), label, format!("basis exceeds {} terms", ctx.config.max_basis_size));
                continue;
            };
            if let Some((_, idx)) = fitted.iter().find(|(s, _)| s == &set) {
                let s = cands[*idx].0.clone();
                let e = trace.push_fit(label.clone(), label, set.len(), s.criterion());
                trace.annotate(e, "same basis as an earlier grid point");
                cands.push((s, e));
                continue;
            }
            match ctx.fit(&set, SchemeId::Pq) {
                Ok(s) => {
                    let e = trace.push_fit(label.clone(), label, set.len(), s.criterion());
                    fitted.push((set, cands.len()));
                    cands.push((s, e));
                }
                Err(err) => {
                    debug!("p&q candidate {label} failed: {err}");
                    trace.push_skip(label.clone(), label, format!("solver failed: {err}"));
                }
            }
        }
    }
    let best = argmin_candidate(&cands).ok_or(PceError::NoValidBasis)?;
    let (surrogate, entry) = cands.swap_remove(best);
    if !surrogate.criterion().value.is_finite() {
        return Err(PceError::NoValidBasis);
    }
    trace.select(entry);
    Ok(AdaptiveFit { surrogate, trace })
}
