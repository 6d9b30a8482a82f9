//! Experimental designs: maximin Latin hypercubes and i.i.d. validation
//! samples, plus deterministic seed derivation for replications.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PceError, Result};
use crate::input_model::InputModel;

pub const DEFAULT_RESTARTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    LhsMaximin,
    Iid,
    External,
}

#[derive(Debug, Clone)]
pub struct Design {
    /// N x d points in the standardized space.
    pub standardized: DMatrix<f64>,
    /// N x d points in the physical space.
    pub physical: DMatrix<f64>,
    pub responses: Option<Vec<f64>>,
    pub seed: u64,
    pub kind: DesignKind,
}

impl Design {
    /// Maps probability levels in `(0,1)^d` through the marginals.
    pub fn from_unit(model: &InputModel, unit: &DMatrix<f64>, seed: u64, kind: DesignKind) -> Result<Self> {
        if unit.ncols() != model.dim() {
            return Err(PceError::DimensionMismatch {
                expected: model.dim(),
                got: unit.ncols(),
            });
        }
        let marginals = model.marginals();
        let standardized =
            DMatrix::from_fn(unit.nrows(), unit.ncols(), |i, j| {
                marginals[j].standard_from_unit(unit[(i, j)])
            });
        let physical = DMatrix::from_fn(unit.nrows(), unit.ncols(), |i, j| {
            marginals[j].from_standard(standardized[(i, j)])
        });
        Ok(Self {
            standardized,
            physical,
            responses: None,
            seed,
            kind,
        })
    }

    /// Wraps externally supplied physical points.
    pub fn from_physical(model: &InputModel, physical: DMatrix<f64>) -> Result<Self> {
        if physical.ncols() != model.dim() {
            return Err(PceError::DimensionMismatch {
                expected: model.dim(),
                got: physical.ncols(),
            });
        }
        let mut standardized = DMatrix::zeros(physical.nrows(), physical.ncols());
        for i in 0..physical.nrows() {
            let x: Vec<f64> = physical.row(i).iter().copied().collect();
            let u = model.to_standard(&x)?;
            for (j, v) in u.into_iter().enumerate() {
                standardized[(i, j)] = v;
            }
        }
        Ok(Self {
            standardized,
            physical,
            responses: None,
            seed: 0,
            kind: DesignKind::External,
        })
    }

    pub fn len(&self) -> usize {
        self.physical.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.physical.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.physical.ncols()
    }

    pub fn physical_row(&self, i: usize) -> Vec<f64> {
        self.physical.row(i).iter().copied().collect()
    }

    pub fn with_responses(mut self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(PceError::DimensionMismatch {
                expected: self.len(),
                got: y.len(),
            });
        }
        self.responses = Some(y);
        Ok(self)
    }

    /// Evaluates `f` on every physical point and stores the responses.
    pub fn evaluate(mut self, f: impl Fn(&[f64]) -> f64) -> Self {
        let y = (0..self.len()).map(|i| f(&self.physical_row(i))).collect();
        self.responses = Some(y);
        self
    }

    pub fn responses(&self) -> Result<&[f64]> {
        self.responses
            .as_deref()
            .ok_or_else(|| PceError::InvalidArgument("design has not been evaluated".into()))
    }

    /// SHA-256 over the physical points and responses, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.len() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.physical.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        if let Some(y) = &self.responses {
            for v in y {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        format!("{:x}", h.finalize())
    }

    /// CSV with columns `x1..xd` and, when evaluated, `y`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("x{j}")).collect();
        if self.responses.is_some() {
            header.push("y".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut fields: Vec<String> = self.physical.row(i).iter().map(|v| v.to_string()).collect();
            if let Some(y) = &self.responses {
                fields.push(y[i].to_string());
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a point CSV with a header: the `y` column, when present, holds the
/// responses and every other column is an input coordinate.
pub fn read_points_csv(path: &Path) -> Result<(DMatrix<f64>, Option<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let y_col = headers.iter().position(|h| h.trim() == "y");
    let d = headers.len() - usize::from(y_col.is_some());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (col, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| PceError::InvalidArgument(format!("row {}: cannot parse {field:?}", row + 1)))?;
            if !v.is_finite() {
                return Err(PceError::NonFinite { row, column: col });
            }
            if Some(col) == y_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    let n = xs.len() / d.max(1);
    let x = DMatrix::from_row_slice(n, d, &xs);
    Ok((x, y_col.map(|_| ys)))
}

/// One Latin hypercube in `(0,1)^d`: random permutation of the strata in
/// every column, uniform jitter inside each stratum.
fn lhs_candidate(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut unit = DMatrix::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let jitter: f64 = rng.sample(Open01);
            unit[(i, j)] = (stratum as f64 + jitter) / n as f64;
        }
    }
    unit
}

/// Smallest pairwise Euclidean distance between rows.
pub fn min_pairwise_distance(points: &DMatrix<f64>) -> f64 {
    let (n, d) = points.shape();
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in (a + 1)..n {
            let mut s = 0.0;
            for j in 0..d {
                let diff = points[(a, j)] - points[(b, j)];
                s += diff * diff;
            }
            if s < best {
                best = s;
            }
        }
    }
    best.sqrt()
}

/// Maximin LHS in the unit hypercube by multi-restart selection.
///
/// All candidates are drawn sequentially from one seeded stream, so the
/// first `k` candidates are identical for any `n_restarts >= k`. Returns the
/// design and its minimal pairwise distance.
pub fn lhs_maximin_unit(n: usize, d: usize, seed: u64, n_restarts: usize) -> Result<(DMatrix<f64>, f64)> {
    if n < 2 || d < 1 || n_restarts < 1 {
        return Err(PceError::InvalidArgument(format!(
            "lhs_maximin needs n >= 2, d >= 1, n_restarts >= 1 (got n={n}, d={d}, restarts={n_restarts})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = lhs_candidate(n, d, &mut rng);
    let mut best_dist = min_pairwise_distance(&best);
    for _ in 1..n_restarts {
        let cand = lhs_candidate(n, d, &mut rng);
        let dist = min_pairwise_distance(&cand);
        if dist > best_dist {
            best = cand;
            best_dist = dist;
        }
    }
    Ok((best, best_dist))
}

pub fn lhs_maximin(model: &InputModel, n: usize, seed: u64, n_restarts: usize) -> Result<Design> {
    let (unit, _) = lhs_maximin_unit(n, model.dim(), seed, n_restarts)?;
    Design::from_unit(model, &unit, seed, DesignKind::LhsMaximin)
}

/// Inverse-CDF i.i.d. sample.
pub fn iid_sample(n: usize, model: &InputModel, seed: u64) -> Result<Design> {
    if n == 0 {
        return Err(PceError::InvalidArgument("iid_sample needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = DMatrix::from_fn(n, model.dim(), |_, _| rng.sample::<f64, _>(Open01));
    Design::from_unit(model, &unit, seed, DesignKind::Iid)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `root` for a path of stream labels, e.g.
/// `[model, n, replication, purpose]`. Each label is folded in with one
/// SplitMix64 round: `s <- splitmix64(s ^ splitmix64(label))`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(root), |s, &label| splitmix64(s ^ splitmix64(label)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input_model::Marginal;

    fn strata_ok(unit: &DMatrix<f64>) -> bool {
        let n = unit.nrows();
        (0..unit.ncols()).all(|j| {
            let mut seen = vec![false; n];
            for i in 0..n {
                let k = (unit[(i, j)] * n as f64).floor() as usize;
                if k >= n || seen[k] {
                    return false;
                }
                seen[k] = true;
            }
            true
        })
    }

    #[test]
    fn csv_points_round_trip() {
        let m = InputModel::iid(Marginal::Uniform { a: 0.0, b: 1.0 }, 2).unwrap();
        let d = lhs_maximin(&m, 5, 3, 2).unwrap().evaluate(|x| x[0] + x[1]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        d.write_csv(&p).unwrap();
        let (x, y) = read_points_csv(&p).unwrap();
        assert_eq!(x, d.physical);
        assert_eq!(y.unwrap(), d.responses().unwrap());
    }

    #[test]
    fn lhs_stratification_small() {
        let (u, _) = lhs_maximin_unit(4, 1, 99, 5).unwrap();
        assert!(strata_ok(&u));
        let (u, _) = lhs_maximin_unit(2, 1, 3, 1).unwrap();
        let mut v = vec![u[(0, 0)], u[(1, 0)]];
        v.sort_by(f64::total_cmp);
        assert!(v[0] < 0.5 && v[1] >= 0.5);
    }

    #[test]
    fn lhs_stratification_many() {
        for n in [2, 3, 10, 57, 200, 1000] {
            let (u, _) = lhs_maximin_unit(n, 3, n as u64, 2).unwrap();
            assert!(strata_ok(&u), "n={n}");
        }
    }

    #[test]
    fn maximin_improves_on_first_candidate() {
        let (_, d1) = lhs_maximin_unit(10, 2, 1, 1).unwrap();
        let (_, d50) = lhs_maximin_unit(10, 2, 1, 50).unwrap();
        assert!(d50 >= d1);
        let mut prev = 0.0;
        for r in 1..=20 {
            let (_, dist) = lhs_maximin_unit(12, 3, 5, r).unwrap();
            assert!(dist >= prev);
            prev = dist;
        }
    }

    #[test]
    fn lhs_is_reproducible() {
        let a = lhs_maximin_unit(30, 4, 17, 10).unwrap().0;
        let b = lhs_maximin_unit(30, 4, 17, 10).unwrap().0;
        let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn iid_examples() {
        let m = InputModel::iid(Marginal::Uniform { a: -1.0, b: 1.0 }, 1).unwrap();
        let d = iid_sample(1000, &m, 42).unwrap();
        let mean = d.physical.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 0.05);
        let d2 = iid_sample(1000, &m, 42).unwrap();
        assert_eq!(d.physical, d2.physical);
        assert!(iid_sample(0, &m, 1).is_err());
    }

    #[test]
    fn lhs_rejects_bad_arguments() {
        assert!(lhs_maximin_unit(1, 2, 0, 1).is_err());
        assert!(lhs_maximin_unit(5, 0, 0, 1).is_err());
        assert!(lhs_maximin_unit(5, 2, 0, 0).is_err());
    }

    #[test]
    fn design_transform_consistent() {
        let m = InputModel::new(vec![
            Marginal::Uniform { a: 0.0, b: 4.0 },
            Marginal::Lognormal { mu_ln: 0.0, sigma_ln: 0.5 },
        ])
        .unwrap();
        let d = lhs_maximin(&m, 20, 8, 3).unwrap();
        for i in 0..d.len() {
            let u = m.to_standard(&d.physical_row(i)).unwrap();
            for j in 0..2 {
                assert!((u[j] - d.standardized[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 50, 0]);
        let b = derive_seed(1, &[0, 50, 1]);
        let c = derive_seed(2, &[0, 50, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, &[0, 50, 0]));
    }
}
