use super::DEFAULT_MAX_BASIS_SIZE;
use crate::multi_index::{hyperbolic_set, hyperbolic_set_capped, MultiIndexSet};

/// q-norm of the static basis: 1 below 20 dimensions, 0.5 from 20 on.
pub fn static_q(d: usize) -> f64 {
    if d < 20 {
        1.0
    } else {
        0.5
    }
}

/// Degree whose hyperbolic basis size is closest to `target`; ties go to
/// the smaller degree. Sizes beyond `cap` are not considered.
pub fn closest_degree(d: usize, q: f64, target: f64, cap: usize) -> u32 {
    let mut best = (f64::INFINITY, 0u32);
    let mut p = 0u32;
    while let Some(set) = hyperbolic_set_capped(d, p, q, cap) {
        let size = set.len() as f64;
        let gap = (size - target).abs();
        if gap < best.0 {
            best = (gap, p);
        }
        if size > target {
            break;
        }
        p += 1;
    }
    best.1
}

pub(crate) fn static_degree(d: usize, n: usize, q: f64, cap: usize) -> u32 {
    closest_degree(d, q, 10.0 * n as f64 / 3.0, cap)
}

/// Static candidate basis for `N` observations in `d` dimensions: the
/// hyperbolic set whose size is closest to `10/3 N`.
pub fn static_basis(d: usize, n: usize) -> MultiIndexSet {
    let q = static_q(d);
    hyperbolic_set(d, static_degree(d, n, q, DEFAULT_MAX_BASIS_SIZE), q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        let s = static_basis(3, 50);
        assert_eq!(s.max_total_degree(), 8);
        assert_eq!(s.len(), 165);
        let s = static_basis(3, 150);
        assert_eq!(s.max_total_degree(), 12);
        assert_eq!(s.len(), 455);
        assert_eq!(static_degree(20, 150, 0.5, DEFAULT_MAX_BASIS_SIZE), 6);
    }

    #[test]
    fn no_strictly_better_degree() {
        for (d, n) in [(2, 10), (5, 60), (8, 100), (10, 250)] {
            let q = static_q(d);
            let p = static_degree(d, n, q, DEFAULT_MAX_BASIS_SIZE);
            let target = 10.0 * n as f64 / 3.0;
            let gap = |p: u32| (hyperbolic_set(d, p, q).len() as f64 - target).abs();
            if p > 0 {
                assert!(gap(p) <= gap(p - 1));
            }
            assert!(gap(p) < gap(p + 1) || gap(p) == gap(p + 1));
        }
    }
}
