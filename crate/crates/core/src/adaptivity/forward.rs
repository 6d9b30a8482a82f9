use log::debug;

use super::{argmin_candidate, closest_degree, AdaptiveFit, AdaptivityTrace, FitContext, SchemeId};
use crate::error::{PceError, Result};
use crate::multi_index::{admissible_frontier, hyperbolic_set_capped, MultiIndex, MultiIndexSet};

/// `set` augmented by all of its admissible forward neighbors.
pub fn expand_admissible(set: &MultiIndexSet) -> MultiIndexSet {
    let frontier = admissible_frontier(set);
    set.union(&frontier).expect("same dimension")
}

/// Forward-neighbor basis adaptivity: restrict to the active terms, expand
/// `T` times by admissible forward neighbors, keep the best expansion, and
/// stop once the best of the `T` does not beat the incumbent.
pub fn forward_neighbor_adaptive(ctx: &FitContext<'_>) -> Result<AdaptiveFit> {
    let d = ctx.dim();
    let cfg = ctx.config;
    let q0 = cfg.fn_initial_q.unwrap_or_else(|| cfg.q_max());
    let p0 = cfg
        .fn_initial_p
        .unwrap_or_else(|| closest_degree(d, q0, 10.0 * ctx.n() as f64, cfg.max_basis_size));
    let initial = hyperbolic_set_capped(d, p0, q0, cfg.max_basis_size).ok_or_else(|| {
        PceError::InvalidArgument(format!(
            "initial basis p={p0}, q={q0} exceeds the maximum basis size {}",
            cfg.max_basis_size
        ))
    })?;

    let mut trace = AdaptivityTrace::default();
    let mut incumbent = ctx.fit(&initial, SchemeId::Fn)?;
    let mut incumbent_entry = trace.push_fit(
        "initial".into(),
        format!("p={p0},q={q0}"),
        initial.len(),
        incumbent.criterion(),
    );

    for iteration in 1.. {
        let mut active = incumbent.active().clone();
        if active.is_empty() {
            active = MultiIndexSet::from_indices(d, [MultiIndex::zero(d)])?;
        }
        let mut cands = Vec::new();
        let mut current = active;
        for t in 1..=cfg.fn_t {
            let label = format!("iter={iteration},t={t}");
            let next = expand_admissible(&current);
            if next.len() == current.len() {
                debug!("forward-neighbor frontier empty at {label}");
                break;
            }
            if next.len() > cfg.max_basis_size {
                trace.push_skip(label, format!("|A|={}", next.len()), format!("basis exceeds {} terms", cfg.max_basis_size));
                break;
            }
            match ctx.fit(&next, SchemeId::Fn) {
                Ok(s) => {
                    let e = trace.push_fit(label, format!("|A|={}", next.len()), next.len(), s.criterion());
                    cands.push((s, e));
                }
                Err(err) => trace.push_skip(label, format!("|A|={}", next.len()), format!("solver failed: {err}")),
            }
            current = next;
        }
        let Some(best) = argmin_candidate(&cands) else {
            break;
        };
        let (s, e) = cands.swap_remove(best);
        if s.criterion().value >= incumbent.criterion().value {
            trace.annotate(e, "no improvement over the incumbent; stop");
            break;
        }
        incumbent = s;
        incumbent_entry = e;
    }
    if !incumbent.criterion().value.is_finite() && trace.min_criterion().is_none() {
        return Err(PceError::NoValidBasis);
    }
    trace.select(incumbent_entry);
    Ok(AdaptiveFit {
        surrogate: incumbent,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_example() {
        let a = MultiIndexSet::from_indices(2, [MultiIndex::new(vec![0, 0]), MultiIndex::new(vec![1, 0])]).unwrap();
        let b = expand_admissible(&a);
        let want: Vec<Vec<u32>> = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0]];
        let got = b.to_vecs();
        assert_eq!(got.len(), 4);
        for w in want {
            assert!(got.contains(&w));
        }
    }
}
