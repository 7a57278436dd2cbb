//! Mark assignment for the Cox-process families.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use super::field::{FieldLattice, GaussianFieldSampler};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityCoupling {
    /// Conditional mark mean `a + b/Λ(x)`.
    Negative,
    /// Conditional mark mean `a + bΛ(x)`.
    Positive,
}

/// Exponential marks whose conditional mean depends on the intensity `Λ = exp(Z)` at the
/// nearest lattice node.
pub fn assign_marks_expimcp<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    field: &FieldLattice,
    a: f64,
    b: f64,
    coupling: IntensityCoupling,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(Error::InvalidModel(format!("need a, b ≥ 0 and a + b > 0 (a={a}, b={b})")));
    }
    points
        .iter()
        .map(|p| {
            let lambda = field.value_at(p[0], p[1]).exp();
            let mean = match coupling {
                IntensityCoupling::Negative if b == 0.0 => a,
                IntensityCoupling::Negative => {
                    if lambda == 0.0 {
                        return Err(Error::IntensityUnderflow { x: p[0], y: p[1] });
                    }
                    a + b / lambda
                }
                IntensityCoupling::Positive => a + b * lambda,
            };
            let e: f64 = Exp1.sample(rng);
            // Exp1 can return exactly 0 with negligible probability; marks stay positive
            Ok(mean * e.max(f64::MIN_POSITIVE))
        })
        .collect()
}

fn noisy_lognormal<R: Rng + ?Sized>(
    z: impl Iterator<Item = f64>,
    a: f64,
    b: f64,
    sigma_eps: f64,
    mean_z: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(a > 0.0) || !(sigma_eps >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidModel(format!(
            "need a > 0 and σ_ε ≥ 0 (a={a}, σ_ε={sigma_eps})"
        )));
    }
    let noise = Normal::new(0.0, sigma_eps).map_err(|e| Error::InvalidModel(e.to_string()))?;
    Ok(z
        .map(|z| {
            let eps = if sigma_eps > 0.0 { noise.sample(rng) } else { 0.0 };
            a * (b * (z + eps - mean_z) / (1.0 + sigma_eps)).exp()
        })
        .collect())
}

/// Lognormal marks driven by the point-generating field plus i.i.d. noise.
pub fn assign_marks_gnimcp<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    field: &FieldLattice,
    a: f64,
    b: f64,
    sigma_eps: f64,
    mean_z: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let z: Vec<f64> = points.iter().map(|p| field.value_at(p[0], p[1])).collect();
    noisy_lognormal(z.into_iter(), a, b, sigma_eps, mean_z, rng)
}

/// Lognormal marks driven by a fresh field, independent of the one that placed the points.
pub fn assign_marks_gncp<R: Rng + ?Sized>(
    points: &[[f64; 2]],
    mark_field: &GaussianFieldSampler,
    a: f64,
    b: f64,
    sigma_eps: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let zm = mark_field.sample(rng);
    let z: Vec<f64> = points.iter().map(|p| zm.value_at(p[0], p[1])).collect();
    noisy_lognormal(z.into_iter(), a, b, sigma_eps, mark_field.spec().mean, rng)
}
