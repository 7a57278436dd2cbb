//! Point locations of a log-Gaussian Cox process conditioned on its point count.

use rand::Rng;

use super::field::FieldLattice;
use crate::error::{Error, Result};

/// `n` i.i.d. locations with density proportional to `exp(Z)`: a cell is drawn with
/// probability proportional to `exp(Z(cell))`, then a uniform point inside it.
pub fn simulate_lgcp_points<R: Rng + ?Sized>(
    field: &FieldLattice,
    n: usize,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Err(Error::InvalidModel("point count must be at least 1".into()));
    }
    let values = field.values();
    if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::DegenerateIntensity);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateIntensity);
    }
    let mut cumulative = Vec::with_capacity(values.len());
    let mut total = 0.0;
    for v in values {
        total += (v - max).exp();
        cumulative.push(total);
    }
    let (nx, _) = field.dims();
    let cell = field.cell();
    let window = *field.window();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        // first cell whose cumulative weight exceeds u; zero-weight cells are never hit
        let k = cumulative.partition_point(|&c| c <= u).min(values.len() - 1);
        let (x0, y0) = field.cell_origin(k % nx, k / nx);
        let x = (x0 + rng.random::<f64>() * cell).min(window.x_max);
        let y = (y0 + rng.random::<f64>() * cell).min(window.y_max);
        points.push([x, y]);
    }
    Ok(points)
}
