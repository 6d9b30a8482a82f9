//! Analytical benchmark models with their input distributions and
//! experimental-design sizes.
//!
//! Closed forms follow the usual UQ literature:
//!
//! * Ishigami, `a = 7`, `b = 0.1`, `X_i ~ U(-pi, pi)`.
//! * Undamped oscillator (Echard et al. 2013): `g = 3r - |2 F1 / (m w0^2) sin(w0 t1 / 2)|`,
//!   `w0 = sqrt((c1 + c2) / m)`.
//! * Borehole (Morris et al. 1993), water flow in m^3/yr.
//! * Damped oscillator (Dubourg 2011): peak-force limit state
//!   `g = Fs - 3 ks sqrt(E[x_s^2])` of a two-degree-of-freedom primary/secondary
//!   system under white noise.
//! * Wing weight (Forrester et al. 2008).
//! * Morris function (Blatman & Sudret 2010 variant, `d = 20`).
//! * `hd100`: a synthetic 100-dimensional function in the style of the UQLab
//!   high-dimensional sensitivity example. It is a substitute, not a
//!   reproduction of any published numbers.

use nalgebra::DMatrix;

use crate::error::{PceError, Result};
use crate::input_model::{InputModel, Marginal};

#[derive(Clone)]
pub struct BenchmarkModel {
    pub id: &'static str,
    pub d: usize,
    pub input_model: InputModel,
    pub small_n: usize,
    pub large_n: usize,
    /// `false` for substitutes that do not correspond to a published benchmark.
    pub canonical: bool,
    func: fn(&[f64]) -> f64,
}

impl std::fmt::Debug for BenchmarkModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkModel")
            .field("id", &self.id)
            .field("d", &self.d)
            .field("small_n", &self.small_n)
            .field("large_n", &self.large_n)
            .finish()
    }
}

impl BenchmarkModel {
    /// Evaluates at one physical point; rejects points outside the support.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.input_model.to_standard(x)?;
        Ok((self.func)(x))
    }

    /// Evaluates without the support check.
    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }

    /// Evaluates every row of `x`.
    pub fn evaluate_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.d {
            return Err(PceError::DimensionMismatch {
                expected: self.d,
                got: x.ncols(),
            });
        }
        let mut row = vec![0.0; self.d];
        (0..x.nrows())
            .map(|i| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = x[(i, j)];
                }
                self.evaluate(&row)
            })
            .collect()
    }

    /// ED size for the small (`false`) or large (`true`) regime.
    pub fn ed_size(&self, large: bool) -> usize {
        if large {
            self.large_n
        } else {
            self.small_n
        }
    }
}

pub const MODEL_IDS: [&str; 7] = [
    "ishigami",
    "oscillator6",
    "borehole",
    "damped8",
    "wingweight",
    "morris",
    "hd100",
];

pub fn registry() -> Vec<BenchmarkModel> {
    MODEL_IDS.iter().map(|id| by_id(id).expect("registered id")).collect()
}

pub fn by_id(id: &str) -> Result<BenchmarkModel> {
    let id: &'static str = MODEL_IDS
        .iter()
        .find(|k| **k == id)
        .ok_or_else(|| PceError::UnknownId(id.to_string()))?;
    let uni = |a: f64, b: f64| Marginal::Uniform { a, b };
    let gauss = |mu: f64, sigma: f64| Marginal::Gaussian { mu, sigma };
    let ln = Marginal::lognormal_from_moments;
    let m = |id: &'static str, marginals: Vec<Marginal>, small_n, large_n, func: fn(&[f64]) -> f64| -> Result<BenchmarkModel> {
        Ok(BenchmarkModel {
            id,
            d: marginals.len(),
            input_model: InputModel::new(marginals)?,
            small_n,
            large_n,
            canonical: id != "hd100",
            func,
        })
    };
    let pi = std::f64::consts::PI;
    match id {
        "ishigami" => m(id, vec![uni(-pi, pi); 3], 50, 150, ishigami),
        "oscillator6" => m(
            id,
            vec![
                gauss(1.0, 0.05),
                gauss(1.0, 0.1),
                gauss(0.1, 0.01),
                gauss(0.5, 0.05),
                gauss(1.0, 0.2),
                gauss(1.0, 0.2),
            ],
            60,
            120,
            undamped_oscillator,
        ),
        "borehole" => m(
            id,
            vec![
                gauss(0.10, 0.0161812),
                Marginal::Lognormal {
                    mu_ln: 7.71,
                    sigma_ln: 1.0056,
                },
                uni(63_070.0, 115_600.0),
                uni(990.0, 1110.0),
                uni(63.1, 116.0),
                uni(700.0, 820.0),
                uni(1120.0, 1680.0),
                uni(9855.0, 12_045.0),
            ],
            100,
            250,
            borehole,
        ),
        "damped8" => m(
            id,
            vec![
                ln(1.5, 0.1),
                ln(0.01, 0.1),
                ln(1.0, 0.2),
                ln(0.01, 0.2),
                ln(0.05, 0.4),
                ln(0.02, 0.5),
                ln(15.0, 0.1),
                ln(100.0, 0.1),
            ],
            150,
            350,
            damped_oscillator,
        ),
        "wingweight" => m(
            id,
            vec![
                uni(150.0, 200.0),
                uni(220.0, 300.0),
                uni(6.0, 10.0),
                uni(-10.0, 10.0),
                uni(16.0, 45.0),
                uni(0.5, 1.0),
                uni(0.08, 0.18),
                uni(2.5, 6.0),
                uni(1700.0, 2500.0),
                uni(0.025, 0.08),
            ],
            100,
            250,
            wingweight,
        ),
        "morris" => m(id, vec![uni(0.0, 1.0); 20], 150, 350, morris),
        "hd100" => {
            let mut marginals = vec![uni(1.0, 2.0); 100];
            marginals[19] = uni(1.0, 3.0);
            m(id, marginals, 400, 1200, hd100)
        }
        _ => Err(PceError::UnknownId(id.to_string())),
    }
}

pub fn ishigami(x: &[f64]) -> f64 {
    let (a, b) = (7.0, 0.1);
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

/// Exact variance of the Ishigami function with `a = 7`, `b = 0.1`.
pub fn ishigami_variance() -> f64 {
    let (a, b) = (7.0f64, 0.1f64);
    let pi = std::f64::consts::PI;
    0.5 + a * a / 8.0 + b * pi.powi(4) / 5.0 + b * b * pi.powi(8) / 18.0
}

pub fn undamped_oscillator(x: &[f64]) -> f64 {
    let (m, c1, c2, r, f1, t1) = (x[0], x[1], x[2], x[3], x[4], x[5]);
    let w0 = ((c1 + c2) / m).sqrt();
    3.0 * r - (2.0 * f1 / (m * w0 * w0) * (w0 * t1 / 2.0).sin()).abs()
}

pub fn borehole(x: &[f64]) -> f64 {
    let (rw, r, tu, hu, tl, hl, l, kw) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
    let lr = (r / rw).ln();
    2.0 * std::f64::consts::PI * tu * (hu - hl) / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl))
}

pub fn damped_oscillator(x: &[f64]) -> f64 {
    let (mp, ms, kp, ks, zp, zs, fs, s0) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
    let wp = (kp / mp).sqrt();
    let ws = (ks / ms).sqrt();
    let gamma = ms / mp;
    let wa = 0.5 * (wp + ws);
    let za = 0.5 * (zp + zs);
    let theta = (wp - ws) / wa;
    let mean_sq = std::f64::consts::PI * s0 / (4.0 * zs * ws.powi(3))
        * (za * zs / (zp * zs * (4.0 * za * za + theta * theta) + gamma * za * za))
        * (zp * wp.powi(3) + zs * ws.powi(3))
        * wp
        / (4.0 * za * wa.powi(4));
    fs - 3.0 * ks * mean_sq.sqrt()
}

pub fn wingweight(x: &[f64]) -> f64 {
    let (sw, wfw, a, lam_deg, q, lam, tc, nz, wdg, wp) =
        (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9]);
    let c = lam_deg.to_radians().cos();
    0.036
        * sw.powf(0.758)
        * wfw.powf(0.0035)
        * (a / (c * c)).powf(0.6)
        * q.powf(0.006)
        * lam.powf(0.04)
        * (100.0 * tc / c).powf(-0.3)
        * (nz * wdg).powf(0.49)
        + sw * wp
}

pub fn morris(x: &[f64]) -> f64 {
    let w: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            // 1-based indices 3, 5, 7 are warped
            if matches!(i + 1, 3 | 5 | 7) {
                2.0 * (1.1 * xi / (xi + 0.1) - 0.5)
            } else {
                2.0 * (xi - 0.5)
            }
        })
        .collect();
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut y = 0.0;
    for i in 1..=20 {
        let bi = if i <= 10 { 20.0 } else { sign(i) };
        y += bi * w[i - 1];
    }
    for i in 1..=20 {
        for j in i + 1..=20 {
            let bij = if j <= 6 { -15.0 } else { sign(i + j) };
            y += bij * w[i - 1] * w[j - 1];
        }
    }
    for i in 1..=5 {
        for j in i + 1..=5 {
            for l in j + 1..=5 {
                y += -10.0 * w[i - 1] * w[j - 1] * w[l - 1];
            }
        }
    }
    for i in 1..=4 {
        for j in i + 1..=4 {
            for l in j + 1..=4 {
                for s in l + 1..=4 {
                    y += 5.0 * w[i - 1] * w[j - 1] * w[l - 1] * w[s - 1];
                }
            }
        }
    }
    y
}

pub fn hd100(x: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mut y = 3.0;
    for (k, &xk) in x.iter().enumerate() {
        let w = (k + 1) as f64;
        y += -5.0 / m * w * xk + w * xk.powi(3) / m + w * (xk * xk + xk.powi(4)).ln() / (3.0 * m);
    }
    y + x[0] * x[1] * x[1] + x[1] * x[3] - x[2] * x[4] + x[50] + x[49] * x[53] * x[53]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ishigami_examples() {
        let m = by_id("ishigami").unwrap();
        assert_eq!(m.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let v = m.evaluate(&[std::f64::consts::FRAC_PI_2, 0.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!((ishigami_variance() - 13.8445).abs() < 1e-4);
        assert!(m.evaluate(&[4.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn registry_sizes() {
        let reg = registry();
        assert_eq!(reg.len(), 7);
        let find = |id: &str| reg.iter().find(|m| m.id == id).unwrap();
        assert_eq!((find("ishigami").small_n, find("ishigami").large_n), (50, 150));
        assert_eq!((find("borehole").small_n, find("borehole").large_n), (100, 250));
        assert_eq!(find("morris").d, 20);
        assert_eq!(find("hd100").d, 100);
        assert!(!find("hd100").canonical);
        for m in &reg {
            assert!(m.small_n < m.large_n);
            assert_eq!(m.input_model.dim(), m.d);
        }
        assert!(by_id("truss").is_err());
    }

    #[test]
    fn nominal_values_are_finite() {
        for m in registry() {
            let x: Vec<f64> = m
                .input_model
                .marginals()
                .iter()
                .map(|mg| mg.from_standard(0.0))
                .collect();
            let y = m.evaluate(&x).unwrap();
            assert!(y.is_finite(), "{} gave {y}", m.id);
        }
    }

    #[test]
    fn borehole_reference_point() {
        // commonly quoted nominal value at the centre of the uniform ranges with rw=0.1, r=exp(7.71)
        let x = [0.1, 7.71f64.exp(), 89_335.0, 1050.0, 89.55, 760.0, 1400.0, 10_950.0];
        let y = borehole(&x);
        assert!(y > 50.0 && y < 100.0, "{y}");
    }
}
