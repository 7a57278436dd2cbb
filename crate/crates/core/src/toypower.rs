//! Exact power of max-type deviation tests for independent toy variables.
//!
//! Example 1: `X_i ~ N(μ_i, σ_i²)`, statistic `max |X_i|` (unscaled) or `max |X_i|/σ_i`
//! (scaled). Example 2: `X_i` is an even mixture of a normal half above `μ_i` with scale
//! `σ_ai` and a normal half below with scale `σ_bi`; the scaled statistic divides positive
//! values by `σ_ai` and negative ones by `σ_bi`.
//!
//! In both cases the maximum of independent variables has the product CDF; the critical
//! value solves `F(c) = 1 − α` with all means zero and the power is `1 − F(c)` under the
//! alternative means.

use serde::Serialize;

use crate::error::{Error, Result};

const ROOT_TOL: f64 = 1e-12;

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of `|X|` for `X ~ N(μ, σ²)`.
pub fn folded_normal_cdf(y: f64, mu: f64, sigma: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::NegativeArgument(y));
    }
    if y == f64::INFINITY {
        return Ok(1.0);
    }
    // Φ((y−μ)/σ) + Φ((y+μ)/σ) − 1, written as a difference of upper tails so that
    // small probabilities keep their relative precision.
    let upper = |z: f64| 0.5 * libm::erfc(z / std::f64::consts::SQRT_2);
    let v = 1.0 - upper((y - mu) / sigma) - upper((y + mu) / sigma);
    Ok(v.clamp(0.0, 1.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

fn check_sds(name: &str, sds: &[f64], n: usize) -> Result<()> {
    if sds.len() != n {
        return Err(Error::InvalidConfig(format!("{name}: expected {n} values, got {}", sds.len())));
    }
    if let Some(s) = sds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidConfig(format!("{name}: standard deviation {s} must be > 0")));
    }
    Ok(())
}

/// Toy example 1: independent normal variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToySpec1 {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub alpha: f64,
}

impl ToySpec1 {
    pub fn new(means: Vec<f64>, sds: Vec<f64>, alpha: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidConfig("toy example needs at least one variable".into()));
        }
        check_sds("sds", &sds, means.len())?;
        check_alpha(alpha)?;
        Ok(ToySpec1 { means, sds, alpha })
    }

    pub fn n(&self) -> usize {
        self.means.len()
    }

    /// Weights `w_i` multiplying `|X_i|` in the statistic.
    pub fn weights(&self, scaled: bool) -> Vec<f64> {
        if scaled {
            self.sds.iter().map(|s| 1.0 / s).collect()
        } else {
            vec![1.0; self.n()]
        }
    }

    fn with_means(&self, means: Vec<f64>) -> Self {
        ToySpec1 { means, ..self.clone() }
    }
}

/// `P(max_i w_i |X_i| ≤ u) = Π_i F_folded(u / w_i; μ_i, σ_i)`.
pub fn toy1_cdf_max(u: f64, spec: &ToySpec1, weights: &[f64]) -> Result<f64> {
    if u < 0.0 {
        return Ok(0.0);
    }
    spec.means
        .iter()
        .zip(&spec.sds)
        .zip(weights)
        .map(|((&mu, &sd), &w)| folded_normal_cdf(u / w, mu, sd))
        .product()
}

/// Solve `cdf(c) = target` for non-decreasing `cdf` by bisection on `[lo, hi]`.
fn bisect(cdf: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    if !(cdf(lo) <= target && cdf(hi) >= target) {
        return Err(Error::RootNotBracketed(format!(
            "F({lo}) = {}, F({hi}) = {}, target {target}",
            cdf(lo),
            cdf(hi)
        )));
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical value of the (un)scaled statistic under all-zero means.
pub fn toy1_critical_value(spec: &ToySpec1, scaled: bool) -> Result<f64> {
    let w = spec.weights(scaled);
    let null = spec.with_means(vec![0.0; spec.n()]);
    let hi = 20.0 * spec.sds.iter().zip(&w).map(|(s, w)| s * w).fold(0.0, f64::max);
    bisect(
        |c| toy1_cdf_max(c, &null, &w).expect("non-negative argument"),
        1.0 - spec.alpha,
        0.0,
        hi,
    )
}

pub fn toy1_power(spec: &ToySpec1, scaled: bool) -> Result<f64> {
    let c = toy1_critical_value(spec, scaled)?;
    Ok(1.0 - toy1_cdf_max(c, spec, &spec.weights(scaled))?)
}

/// Toy example 2: independent variables with different spread above and below the mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToySpec2 {
    pub means: Vec<f64>,
    /// Scale of the half above the mean.
    pub sds_upper: Vec<f64>,
    /// Scale of the half below the mean.
    pub sds_lower: Vec<f64>,
    pub alpha: f64,
}

impl ToySpec2 {
    pub fn new(means: Vec<f64>, sds_upper: Vec<f64>, sds_lower: Vec<f64>, alpha: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidConfig("toy example needs at least one variable".into()));
        }
        check_sds("sds_upper", &sds_upper, means.len())?;
        check_sds("sds_lower", &sds_lower, means.len())?;
        check_alpha(alpha)?;
        Ok(ToySpec2 { means, sds_upper, sds_lower, alpha })
    }

    pub fn n(&self) -> usize {
        self.means.len()
    }

    /// Weights `(w⁺_i, w⁻_i)` for positive and negative values.
    pub fn weights(&self, scaled: bool) -> Vec<(f64, f64)> {
        if scaled {
            self.sds_upper.iter().zip(&self.sds_lower).map(|(a, b)| (1.0 / a, 1.0 / b)).collect()
        } else {
            vec![(1.0, 1.0); self.n()]
        }
    }

    fn with_means(&self, means: Vec<f64>) -> Self {
        ToySpec2 { means, ..self.clone() }
    }
}

/// CDF of the two-sided half-normal mixture with split point `mu`.
pub fn toy2_cdf_x(x: f64, mu: f64, sd_upper: f64, sd_lower: f64) -> f64 {
    if x >= mu {
        0.5 + 0.5 * (2.0 * normal_cdf((x - mu) / sd_upper) - 1.0)
    } else {
        normal_cdf((x - mu) / sd_lower)
    }
}

/// `P(max_i Z_i ≤ u)` with `Z_i = w⁺_i X_i` for `X_i ≥ 0` and `−w⁻_i X_i` otherwise.
pub fn toy2_cdf_max(u: f64, spec: &ToySpec2, weights: &[(f64, f64)]) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    spec.means
        .iter()
        .zip(spec.sds_upper.iter().zip(&spec.sds_lower))
        .zip(weights)
        .map(|((&mu, (&sa, &sb)), &(wp, wm))| {
            (toy2_cdf_x(u / wp, mu, sa, sb) - toy2_cdf_x(-u / wm, mu, sa, sb)).max(0.0)
        })
        .product()
}

pub fn toy2_critical_value(spec: &ToySpec2, scaled: bool) -> Result<f64> {
    let w = spec.weights(scaled);
    let null = spec.with_means(vec![0.0; spec.n()]);
    let hi = 20.0
        * spec
            .sds_upper
            .iter()
            .zip(&spec.sds_lower)
            .zip(&w)
            .map(|((a, b), (wp, wm))| (a * wp).max(b * wm))
            .fold(0.0, f64::max);
    bisect(|c| toy2_cdf_max(c, &null, &w), 1.0 - spec.alpha, 0.0, hi)
}

pub fn toy2_power(spec: &ToySpec2, scaled: bool) -> Result<f64> {
    let c = toy2_critical_value(spec, scaled)?;
    Ok(1.0 - toy2_cdf_max(c, spec, &spec.weights(scaled)))
}

/// Which toy example and which of its two cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyCase {
    /// Example 1 (a): `σ = (1, 1, 0.1)`.
    Normal1a,
    /// Example 1 (b): `σ = (0.1, 0.1, 1)`.
    Normal1b,
    /// Example 2 (a): `σ_a = 0.1`, `σ_b = 0.13`.
    Asymmetric2a,
    /// Example 2 (b): `σ_a = 0.1`, `σ_b = 0.07`.
    Asymmetric2b,
}

impl ToyCase {
    pub fn from_flags(example: u8, case: char) -> Result<Self> {
        match (example, case) {
            (1, 'a') => Ok(ToyCase::Normal1a),
            (1, 'b') => Ok(ToyCase::Normal1b),
            (2, 'a') => Ok(ToyCase::Asymmetric2a),
            (2, 'b') => Ok(ToyCase::Asymmetric2b),
            _ => Err(Error::InvalidConfig(format!("no toy example {example}{case}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPoint {
    pub mu3: f64,
    pub power_unscaled: f64,
    pub power_scaled: f64,
}

/// Power of both tests with `μ₁ = μ₂ = 0` and `μ₃` running over `mu3_values`.
pub fn toy_power_curve(case: ToyCase, mu3_values: &[f64], alpha: f64) -> Result<Vec<PowerPoint>> {
    mu3_values
        .iter()
        .map(|&mu3| {
            let means = vec![0.0, 0.0, mu3];
            let (power_unscaled, power_scaled) = match case {
                ToyCase::Normal1a | ToyCase::Normal1b => {
                    let sds = if case == ToyCase::Normal1a {
                        vec![1.0, 1.0, 0.1]
                    } else {
                        vec![0.1, 0.1, 1.0]
                    };
                    let spec = ToySpec1::new(means, sds, alpha)?;
                    (toy1_power(&spec, false)?, toy1_power(&spec, true)?)
                }
                ToyCase::Asymmetric2a | ToyCase::Asymmetric2b => {
                    let lower = if case == ToyCase::Asymmetric2a { 0.13 } else { 0.07 };
                    let spec = ToySpec2::new(means, vec![0.1; 3], vec![lower; 3], alpha)?;
                    (toy2_power(&spec, false)?, toy2_power(&spec, true)?)
                }
            };
            Ok(PowerPoint { mu3, power_unscaled, power_scaled })
        })
        .collect()
}
