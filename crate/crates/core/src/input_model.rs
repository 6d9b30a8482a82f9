//! Independent input marginals and the isoprobabilistic map between the
//! physical space and the standardized space of the orthonormal bases.
//!
//! Uniform marginals map affinely onto `[-1, 1]` (Legendre), every other
//! family maps onto the standard normal (Hermite).

use serde::{Deserialize, Serialize};

use crate::error::{PceError, Result};
use crate::normal;
use crate::poly_basis::BasisFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Marginal {
    Uniform { a: f64, b: f64 },
    Gaussian { mu: f64, sigma: f64 },
    Lognormal { mu_ln: f64, sigma_ln: f64 },
    Gumbel { mu_g: f64, beta: f64 },
}

impl Marginal {
    /// Lognormal marginal from its mean and coefficient of variation.
    pub fn lognormal_from_moments(mean: f64, cov: f64) -> Self {
        let sigma_ln2 = (1.0 + cov * cov).ln();
        Marginal::Lognormal {
            mu_ln: mean.ln() - 0.5 * sigma_ln2,
            sigma_ln: sigma_ln2.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform { a, b } => a.is_finite() && b.is_finite() && b > a,
            Marginal::Gaussian { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Marginal::Lognormal { mu_ln, sigma_ln } => {
                mu_ln.is_finite() && sigma_ln.is_finite() && sigma_ln > 0.0
            }
            Marginal::Gumbel { mu_g, beta } => mu_g.is_finite() && beta.is_finite() && beta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(PceError::InvalidMarginal(format!("{self:?}")))
        }
    }

    pub fn family(&self) -> BasisFamily {
        match self {
            Marginal::Uniform { .. } => BasisFamily::Legendre,
            _ => BasisFamily::Hermite,
        }
    }

    /// Physical value to standardized value. `None` outside the support.
    pub fn to_standard(&self, x: f64) -> Option<f64> {
        if !x.is_finite() {
            return None;
        }
        match *self {
            Marginal::Uniform { a, b } => {
                if x < a || x > b {
                    None
                } else {
                    Some((2.0 * x - a - b) / (b - a))
                }
            }
            Marginal::Gaussian { mu, sigma } => Some((x - mu) / sigma),
            Marginal::Lognormal { mu_ln, sigma_ln } => {
                if x <= 0.0 {
                    None
                } else {
                    Some((x.ln() - mu_ln) / sigma_ln)
                }
            }
            Marginal::Gumbel { mu_g, beta } => {
                let z = (x - mu_g) / beta;
                let t = (-z).exp();
                let cdf = (-t).exp();
                if cdf <= 0.5 {
                    Some(normal::quantile(cdf))
                } else {
                    // survival function computed without cancellation
                    Some(normal::upper_quantile(-(-t).exp_m1()))
                }
            }
        }
    }

    /// Standardized value to physical value.
    pub fn from_standard(&self, u: f64) -> f64 {
        match *self {
            Marginal::Uniform { a, b } => 0.5 * (a + b) + 0.5 * (b - a) * u,
            Marginal::Gaussian { mu, sigma } => mu + sigma * u,
            Marginal::Lognormal { mu_ln, sigma_ln } => (mu_ln + sigma_ln * u).exp(),
            Marginal::Gumbel { mu_g, beta } => {
                let z = if u <= 0.0 {
                    -(-normal::cdf(u).ln()).ln()
                } else {
                    -(-(-normal::cdf(-u)).ln_1p()).ln()
                };
                mu_g + beta * z
            }
        }
    }

    /// Maps a probability level in (0,1) to the standardized space.
    pub fn standard_from_unit(&self, z: f64) -> f64 {
        match self {
            Marginal::Uniform { .. } => 2.0 * z - 1.0,
            _ => normal::quantile(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InputModelRepr")]
pub struct InputModel {
    marginals: Vec<Marginal>,
}

#[derive(Deserialize)]
struct InputModelRepr {
    marginals: Vec<Marginal>,
}

impl TryFrom<InputModelRepr> for InputModel {
    type Error = PceError;

    fn try_from(repr: InputModelRepr) -> Result<Self> {
        InputModel::new(repr.marginals)
    }
}

impl InputModel {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(PceError::InvalidArgument(
                "input model needs at least one marginal".into(),
            ));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(Self { marginals })
    }

    /// `d` identical marginals.
    pub fn iid(marginal: Marginal, d: usize) -> Result<Self> {
        Self::new(vec![marginal; d])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn families(&self) -> Vec<BasisFamily> {
        self.marginals.iter().map(Marginal::family).collect()
    }

    pub fn to_standard(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        x.iter()
            .zip(&self.marginals)
            .enumerate()
            .map(|(coordinate, (&value, m))| {
                m.to_standard(value)
                    .ok_or(PceError::OutsideSupport { coordinate, value })
            })
            .collect()
    }

    pub fn from_standard(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        Ok(u.iter()
            .zip(&self.marginals)
            .map(|(&v, m)| m.from_standard(v))
            .collect())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(PceError::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn single(m: Marginal) -> InputModel {
        InputModel::new(vec![m]).unwrap()
    }

    #[test]
    fn to_standard_examples() {
        let uni = single(Marginal::Uniform { a: -PI, b: PI });
        assert_eq!(uni.to_standard(&[0.0]).unwrap(), vec![0.0]);

        let ln = single(Marginal::Lognormal { mu_ln: 0.0, sigma_ln: 1.0 });
        assert_eq!(ln.to_standard(&[1.0]).unwrap(), vec![0.0]);

        // Phi^-1(exp(-1)) by bisection on the CDF
        let target = (-1.0f64).exp();
        let (mut lo, mut hi) = (-5.0, 5.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal::cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let gumbel = single(Marginal::Gumbel { mu_g: 0.0, beta: 1.0 });
        let u = gumbel.to_standard(&[0.0]).unwrap()[0];
        assert!((u - lo).abs() < 1e-12);
        assert!((u + 0.3375).abs() < 1e-4);
    }

    #[test]
    fn from_standard_examples() {
        let uni = single(Marginal::Uniform { a: 0.0, b: 2.0 });
        assert_eq!(uni.from_standard(&[-1.0]).unwrap(), vec![0.0]);
        let g = single(Marginal::Gaussian { mu: 5.0, sigma: 2.0 });
        assert_eq!(g.from_standard(&[0.0]).unwrap(), vec![5.0]);
        let ln = single(Marginal::Lognormal { mu_ln: 0.0, sigma_ln: 1.0 });
        let x = ln.from_standard(&[1.0]).unwrap()[0];
        assert!((x - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn outside_support_names_coordinate() {
        let m = InputModel::new(vec![
            Marginal::Gaussian { mu: 0.0, sigma: 1.0 },
            Marginal::Uniform { a: 0.0, b: 1.0 },
        ])
        .unwrap();
        match m.to_standard(&[0.3, 1.5]) {
            Err(PceError::OutsideSupport { coordinate, .. }) => assert_eq!(coordinate, 1),
            other => panic!("unexpected {other:?}"),
        }
        let ln = single(Marginal::Lognormal { mu_ln: 0.0, sigma_ln: 1.0 });
        assert!(ln.to_standard(&[-1.0]).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(InputModel::new(vec![Marginal::Uniform { a: 1.0, b: 1.0 }]).is_err());
        assert!(InputModel::new(vec![Marginal::Gaussian { mu: 0.0, sigma: 0.0 }]).is_err());
        assert!(InputModel::new(vec![Marginal::Gumbel { mu_g: 0.0, beta: -1.0 }]).is_err());
        assert!(InputModel::new(vec![]).is_err());
        let bad = r#"{"marginals":[{"family":"lognormal","mu_ln":0.0,"sigma_ln":-2.0}]}"#;
        assert!(serde_json::from_str::<InputModel>(bad).is_err());
    }

    #[test]
    fn json_schema() {
        let json = r#"{"marginals":[{"family":"uniform","a":-1.0,"b":2.0},
            {"family":"gaussian","mu":1.0,"sigma":0.5},
            {"family":"lognormal","mu_ln":0.1,"sigma_ln":0.2},
            {"family":"gumbel","mu_g":3.0,"beta":1.5}]}"#;
        let m: InputModel = serde_json::from_str(json).unwrap();
        assert_eq!(m.dim(), 4);
        let back: InputModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    fn families() -> Vec<Marginal> {
        vec![
            Marginal::Uniform { a: -2.0, b: 7.0 },
            Marginal::Gaussian { mu: 1.0, sigma: 3.0 },
            Marginal::Lognormal { mu_ln: 0.5, sigma_ln: 0.4 },
            Marginal::Gumbel { mu_g: -1.0, beta: 2.0 },
        ]
    }

    #[test]
    fn round_trip_in_standard_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in families() {
            for _ in 0..1000 {
                let u = match m {
                    Marginal::Uniform { .. } => rng.random_range(-1.0..=1.0),
                    _ => normal::quantile(rng.random_range(1e-6..1.0 - 1e-6)),
                };
                let back = m.to_standard(m.from_standard(u)).unwrap();
                assert!((back - u).abs() <= 1e-12, "{m:?}: u={u}, back={back}");
            }
        }
    }

    #[test]
    fn transforms_are_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in families() {
            let mut us: Vec<f64> = (0..500)
                .map(|_| m.standard_from_unit(rng.random_range(1e-6..1.0 - 1e-6)))
                .collect();
            us.sort_by(f64::total_cmp);
            us.dedup();
            let xs: Vec<f64> = us.iter().map(|&u| m.from_standard(u)).collect();
            assert!(xs.windows(2).all(|w| w[0] < w[1]), "{m:?}");
        }
    }
}
