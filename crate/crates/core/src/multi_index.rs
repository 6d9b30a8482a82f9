//! Truncation sets of polynomial degree multi-indices.
//!
//! Every set is kept in graded order: ascending total degree, ties broken by
//! descending lexicographic order, so `(1,0)` precedes `(0,1)`. Regression
//! matrices built from a set therefore have a reproducible column order.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PceError, Result};

/// Relative slack on q-norm comparisons for `q < 1`.
pub const QNORM_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(degrees: Vec<u32>) -> Self {
        Self(degrees)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Number of non-constant factors.
    pub fn interaction_order(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    pub fn qnorm(&self, q: f64) -> f64 {
        qnorm(self, q)
    }

    /// `alpha + e_i` for every dimension.
    pub fn forward_neighbors(&self) -> Vec<MultiIndex> {
        forward_neighbors(self)
    }

    /// `alpha - e_i` for every dimension with `alpha_i >= 1`.
    pub fn backward_neighbors(&self) -> Vec<MultiIndex> {
        (0..self.dim())
            .filter(|&i| self.0[i] > 0)
            .map(|i| {
                let mut b = self.0.clone();
                b[i] -= 1;
                MultiIndex(b)
            })
            .collect()
    }

    pub fn graded_cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// `(sum alpha_i^q)^(1/q)`.
pub fn qnorm(alpha: &MultiIndex, q: f64) -> f64 {
    if q == 1.0 {
        return alpha.total_degree() as f64;
    }
    alpha
        .0
        .iter()
        .filter(|&&a| a > 0)
        .map(|&a| (a as f64).powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

fn within_qnorm(alpha: &MultiIndex, p: u32, q: f64) -> bool {
    if q == 1.0 {
        alpha.total_degree() <= p
    } else {
        qnorm(alpha, q) <= p as f64 * (1.0 + QNORM_RTOL)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MultiIndex>", into = "Vec<MultiIndex>")]
pub struct MultiIndexSet {
    dim: usize,
    indices: Vec<MultiIndex>,
}

impl TryFrom<Vec<MultiIndex>> for MultiIndexSet {
    type Error = PceError;

    fn try_from(indices: Vec<MultiIndex>) -> Result<Self> {
        let dim = indices.first().map_or(0, MultiIndex::dim);
        let n = indices.len();
        let set = MultiIndexSet::from_indices(dim, indices)?;
        if set.len() != n {
            return Err(PceError::Schema("duplicate multi-indices".into()));
        }
        Ok(set)
    }
}

impl From<MultiIndexSet> for Vec<MultiIndex> {
    fn from(set: MultiIndexSet) -> Self {
        set.indices
    }
}

impl MultiIndexSet {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
        }
    }

    /// Builds a set from arbitrary indices: sorts into graded order and
    /// removes duplicates.
    pub fn from_indices(dim: usize, indices: impl IntoIterator<Item = MultiIndex>) -> Result<Self> {
        let mut indices: Vec<MultiIndex> = indices.into_iter().collect();
        if let Some(bad) = indices.iter().find(|a| a.dim() != dim) {
            return Err(PceError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        indices.sort_by(MultiIndex::graded_cmp);
        indices.dedup();
        Ok(Self { dim, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.indices
            .binary_search_by(|probe| probe.graded_cmp(alpha))
            .is_ok()
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.indices
            .binary_search_by(|probe| probe.graded_cmp(alpha))
            .ok()
    }

    /// Subset given by positions into this set.
    pub fn subset(&self, positions: &[usize]) -> Self {
        let indices = positions.iter().map(|&i| self.indices[i].clone());
        Self::from_indices(self.dim, indices).expect("same dimension")
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        Self::from_indices(
            self.dim,
            self.indices.iter().chain(other.indices.iter()).cloned(),
        )
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.indices.iter().all(|a| other.contains(a))
    }

    /// Every member's backward neighbors are members too.
    pub fn is_downward_closed(&self) -> bool {
        self.indices
            .iter()
            .all(|a| a.backward_neighbors().iter().all(|b| self.contains(b)))
    }

    /// Componentwise maximal degree over the set.
    pub fn max_degrees(&self) -> Vec<u32> {
        let mut out = vec![0; self.dim];
        for a in &self.indices {
            for (m, &v) in out.iter_mut().zip(a.degrees()) {
                *m = (*m).max(v);
            }
        }
        out
    }

    pub fn max_total_degree(&self) -> u32 {
        self.indices
            .iter()
            .map(MultiIndex::total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn to_vecs(&self) -> Vec<Vec<u32>> {
        self.indices.iter().map(|a| a.0.clone()).collect()
    }
}

/// All `alpha` with `|alpha|_1 <= p`; cardinality `binomial(d + p, p)`.
pub fn total_degree_set(d: usize, p: u32) -> MultiIndexSet {
    hyperbolic_set(d, p, 1.0)
}

/// `{alpha : |alpha|_q <= p}`.
pub fn hyperbolic_set(d: usize, p: u32, q: f64) -> MultiIndexSet {
    hyperbolic_set_capped(d, p, q, usize::MAX).expect("uncapped generation")
}

/// Like [`hyperbolic_set`] but gives up (returns `None`) as soon as the set
/// would exceed `cap` members.
pub fn hyperbolic_set_capped(d: usize, p: u32, q: f64, cap: usize) -> Option<MultiIndexSet> {
    assert!(d >= 1, "dimension must be positive");
    assert!(q > 0.0 && q <= 1.0, "q must lie in (0, 1]");
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    let ok = if q == 1.0 {
        grow_total(&mut current, 0, p, cap, &mut out)
    } else {
        let bound = (p as f64 * (1.0 + QNORM_RTOL)).powf(q);
        grow_hyperbolic(&mut current, 0, 0.0, bound, p, q, cap, &mut out)
    };
    if !ok {
        return None;
    }
    Some(MultiIndexSet::from_indices(d, out).expect("consistent dimension"))
}

fn grow_total(
    current: &mut [u32],
    dim: usize,
    budget: u32,
    cap: usize,
    out: &mut Vec<MultiIndex>,
) -> bool {
    if dim == current.len() {
        if out.len() >= cap {
            return false;
        }
        out.push(MultiIndex(current.to_vec()));
        return true;
    }
    for a in 0..=budget {
        current[dim] = a;
        if !grow_total(current, dim + 1, budget - a, cap, out) {
            return false;
        }
    }
    current[dim] = 0;
    true
}

#[allow(clippy::too_many_arguments)]
fn grow_hyperbolic(
    current: &mut [u32],
    dim: usize,
    partial: f64,
    bound: f64,
    p: u32,
    q: f64,
    cap: usize,
    out: &mut Vec<MultiIndex>,
) -> bool {
    if dim == current.len() {
        let alpha = MultiIndex(current.to_vec());
        if within_qnorm(&alpha, p, q) {
            if out.len() >= cap {
                return false;
            }
            out.push(alpha);
        }
        return true;
    }
    let mut a = 0u32;
    loop {
        let s = if a == 0 { partial } else { partial + (a as f64).powf(q) };
        if s > bound * (1.0 + 1e-12) || a > p {
            break;
        }
        current[dim] = a;
        if !grow_hyperbolic(current, dim + 1, s, bound, p, q, cap, out) {
            return false;
        }
        a += 1;
    }
    current[dim] = 0;
    true
}

/// `{alpha : sum alpha_i / p_i <= 1}` for a degree vector with `p_i >= 1`.
pub fn anisotropic_set(p_vec: &[u32]) -> MultiIndexSet {
    anisotropic_set_capped(p_vec, usize::MAX).expect("uncapped generation")
}

/// Recursive dimension-wise generation: each coordinate ranges over what the
/// remaining budget of `sum alpha_i / p_i` allows, so the box
/// `prod [0, p_i]` is never enumerated.
pub fn anisotropic_set_capped(p_vec: &[u32], cap: usize) -> Option<MultiIndexSet> {
    assert!(!p_vec.is_empty(), "dimension must be positive");
    assert!(p_vec.iter().all(|&p| p >= 1), "anisotropic degrees must be >= 1");
    let d = p_vec.len();
    let mut out = Vec::new();
    let mut current = vec![0u32; d];

    // Exact integer arithmetic on the common denominator when it fits.
    let lcm = p_vec
        .iter()
        .try_fold(1u128, |acc, &p| checked_lcm(acc, p as u128));
    let ok = match lcm {
        Some(l) => {
            let weights: Vec<u128> = p_vec.iter().map(|&p| l / p as u128).collect();
            grow_aniso_exact(&mut current, 0, l, &weights, cap, &mut out)
        }
        None => grow_aniso_float(&mut current, 0, 1.0 + 1e-9, p_vec, cap, &mut out),
    };
    if !ok {
        return None;
    }
    Some(MultiIndexSet::from_indices(d, out).expect("consistent dimension"))
}

fn checked_lcm(a: u128, b: u128) -> Option<u128> {
    fn gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    (a / gcd(a, b)).checked_mul(b)
}

fn grow_aniso_exact(
    current: &mut [u32],
    dim: usize,
    budget: u128,
    weights: &[u128],
    cap: usize,
    out: &mut Vec<MultiIndex>,
) -> bool {
    if dim == current.len() {
        if out.len() >= cap {
            return false;
        }
        out.push(MultiIndex(current.to_vec()));
        return true;
    }
    let max_a = (budget / weights[dim]) as u32;
    for a in 0..=max_a {
        current[dim] = a;
        let rest = budget - a as u128 * weights[dim];
        if !grow_aniso_exact(current, dim + 1, rest, weights, cap, out) {
            return false;
        }
    }
    current[dim] = 0;
    true
}

fn grow_aniso_float(
    current: &mut [u32],
    dim: usize,
    budget: f64,
    p_vec: &[u32],
    cap: usize,
    out: &mut Vec<MultiIndex>,
) -> bool {
    if dim == current.len() {
        if out.len() >= cap {
            return false;
        }
        out.push(MultiIndex(current.to_vec()));
        return true;
    }
    let p = p_vec[dim] as f64;
    let max_a = (budget * p).floor().max(0.0) as u32;
    for a in 0..=max_a {
        current[dim] = a;
        if !grow_aniso_float(current, dim + 1, budget - a as f64 / p, p_vec, cap, out) {
            return false;
        }
    }
    current[dim] = 0;
    true
}

/// `alpha + e_i` for `i = 1..d`.
pub fn forward_neighbors(alpha: &MultiIndex) -> Vec<MultiIndex> {
    (0..alpha.dim())
        .map(|i| {
            let mut b = alpha.0.clone();
            b[i] += 1;
            MultiIndex(b)
        })
        .collect()
}

/// Forward neighbors of `active` that are not in `active` and whose
/// backward neighbors all lie in `active`.
pub fn admissible_frontier(active: &MultiIndexSet) -> MultiIndexSet {
    let members: HashSet<&MultiIndex> = active.iter().collect();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for alpha in active.iter() {
        for beta in forward_neighbors(alpha) {
            if members.contains(&beta) || seen.contains(&beta) {
                continue;
            }
            if beta
                .backward_neighbors()
                .iter()
                .all(|b| members.contains(b))
            {
                seen.insert(beta.clone());
                out.push(beta);
            }
        }
    }
    MultiIndexSet::from_indices(active.dim(), out).expect("consistent dimension")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(d: usize, v: &[&[u32]]) -> MultiIndexSet {
        MultiIndexSet::from_indices(d, v.iter().map(|a| MultiIndex::new(a.to_vec()))).unwrap()
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn total_degree_examples() {
        assert_eq!(total_degree_set(2, 2).len(), 6);
        assert_eq!(total_degree_set(3, 12).len(), 455);
        let s = total_degree_set(1, 0);
        assert_eq!(s.to_vecs(), vec![vec![0]]);
    }

    #[test]
    fn cardinality_identity() {
        for d in 1..=6 {
            for p in 0..=10 {
                assert_eq!(
                    total_degree_set(d, p).len() as u64,
                    binomial((d as u64) + p as u64, p as u64),
                    "d={d} p={p}"
                );
            }
        }
    }

    #[test]
    fn graded_order() {
        let s = total_degree_set(2, 2);
        assert_eq!(
            s.to_vecs(),
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn qnorm_examples() {
        assert_eq!(qnorm(&MultiIndex::new(vec![1, 1]), 1.0), 2.0);
        assert!((qnorm(&MultiIndex::new(vec![1, 1]), 0.5) - 4.0).abs() < 1e-12);
        assert!((qnorm(&MultiIndex::new(vec![2, 0, 0]), 0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_examples() {
        assert_eq!(hyperbolic_set(2, 2, 1.0), total_degree_set(2, 2));
        assert_eq!(
            hyperbolic_set(2, 2, 0.5),
            set(2, &[&[0, 0], &[1, 0], &[0, 1], &[2, 0], &[0, 2]])
        );
        for q in [0.3, 0.5, 0.8, 1.0] {
            assert_eq!(hyperbolic_set(3, 1, q).len(), 4);
        }
    }

    #[test]
    fn hyperbolic_boundary_is_inclusive() {
        // |(1,1,1,1)|_0.5 = 16 exactly
        let s = hyperbolic_set(4, 16, 0.5);
        assert!(s.contains(&MultiIndex::new(vec![1, 1, 1, 1])));
    }

    #[test]
    fn capped_generation_gives_up() {
        assert!(hyperbolic_set_capped(3, 12, 1.0, 454).is_none());
        assert_eq!(hyperbolic_set_capped(3, 12, 1.0, 455).unwrap().len(), 455);
        assert!(anisotropic_set_capped(&[5, 5, 5], 10).is_none());
    }

    #[test]
    fn anisotropic_examples() {
        assert_eq!(anisotropic_set(&[2, 2]), total_degree_set(2, 2));
        assert_eq!(
            anisotropic_set(&[3, 2]),
            set(
                2,
                &[&[0, 0], &[1, 0], &[2, 0], &[3, 0], &[0, 1], &[1, 1], &[0, 2]]
            )
        );
        assert_eq!(anisotropic_set(&[1; 7]).len(), 8);
    }

    #[test]
    fn neighbors() {
        let n = forward_neighbors(&MultiIndex::new(vec![0, 0]));
        assert_eq!(n, vec![MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 1])]);
        let n = forward_neighbors(&MultiIndex::new(vec![2, 1]));
        assert_eq!(n, vec![MultiIndex::new(vec![3, 1]), MultiIndex::new(vec![2, 2])]);
        assert_eq!(forward_neighbors(&MultiIndex::zero(3)).len(), 3);
    }

    #[test]
    fn frontier_examples() {
        assert_eq!(
            admissible_frontier(&set(2, &[&[0, 0]])),
            set(2, &[&[1, 0], &[0, 1]])
        );
        assert_eq!(
            admissible_frontier(&set(2, &[&[0, 0], &[1, 0]])),
            set(2, &[&[2, 0], &[0, 1]])
        );
        assert_eq!(
            admissible_frontier(&set(2, &[&[0, 0], &[1, 0], &[0, 1]])),
            set(2, &[&[2, 0], &[1, 1], &[0, 2]])
        );
    }

    #[test]
    fn json_shape() {
        let s = set(2, &[&[0, 0], &[1, 0]]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[0,0],[1,0]]");
        let back: MultiIndexSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<MultiIndexSet>("[[0,0],[0,0]]").is_err());
        assert!(serde_json::from_str::<MultiIndexSet>("[[0,0],[1]]").is_err());
    }
}
