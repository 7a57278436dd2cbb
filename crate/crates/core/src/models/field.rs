//! Stationary Gaussian random fields with exponential covariance on a regular lattice,
//! sampled by circulant embedding.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Window;

/// Largest tolerated fraction of spectral mass removed by clipping negative eigenvalues.
const MAX_CLIPPED_FRACTION: f64 = 1e-3;

/// Mean, range and lattice resolution of a unit-variance field with covariance
/// `C(r) = exp(−r/range)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFieldSpec {
    pub mean: f64,
    pub range: f64,
    pub cell: f64,
}

impl Default for GaussianFieldSpec {
    fn default() -> Self {
        GaussianFieldSpec { mean: -4.4, range: 4.0, cell: 0.5 }
    }
}

impl GaussianFieldSpec {
    pub fn covariance(&self, r: f64) -> f64 {
        (-r / self.range).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::InvalidModel(format!("field range {} must be > 0", self.range)));
        }
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::InvalidModel(format!("field cell {} must be > 0", self.cell)));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidModel("field mean must be finite".into()));
        }
        Ok(())
    }
}

/// Field values at the cell centers of a window lattice, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldLattice {
    window: Window,
    nx: usize,
    ny: usize,
    cell: f64,
    values: Vec<f64>,
}

impl FieldLattice {
    pub fn new(window: Window, cell: f64, values: Vec<f64>) -> Result<Self> {
        let (nx, ny) = window.lattice_dims(cell)?;
        if values.len() != nx * ny {
            return Err(Error::InvalidModel(format!(
                "lattice needs {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        Ok(FieldLattice { window, nx, ny, cell, values })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    /// Index of the lattice node nearest to `(x, y)`, i.e. the cell containing it.
    pub fn node_of(&self, x: f64, y: f64) -> (usize, usize) {
        let ix = ((x - self.window.x_min) / self.cell).floor().max(0.0) as usize;
        let iy = ((y - self.window.y_min) / self.cell).floor().max(0.0) as usize;
        (ix.min(self.nx - 1), iy.min(self.ny - 1))
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let (ix, iy) = self.node_of(x, y);
        self.get(ix, iy)
    }

    /// Lower-left corner of cell `(ix, iy)`.
    pub fn cell_origin(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.window.x_min + ix as f64 * self.cell,
            self.window.y_min + iy as f64 * self.cell,
        )
    }
}

struct Fft2 {
    mx: usize,
    my: usize,
    rows: Arc<dyn Fft<f64>>,
    cols: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(mx: usize, my: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { mx, my, rows: planner.plan_fft_forward(mx), cols: planner.plan_fft_forward(my) }
    }

    /// In-place forward 2-D transform of a row-major `my × mx` buffer.
    fn forward(&self, data: &mut [Complex64]) {
        self.rows.process(data);
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        for y in 0..self.my {
            for x in 0..self.mx {
                t[x * self.my + y] = data[y * self.mx + x];
            }
        }
        self.cols.process(&mut t);
        for x in 0..self.mx {
            for y in 0..self.my {
                data[y * self.mx + x] = t[x * self.my + y];
            }
        }
    }
}

/// Circulant-embedding sampler; the spectral setup is done once and shared.
pub struct GaussianFieldSampler {
    spec: GaussianFieldSpec,
    window: Window,
    nx: usize,
    ny: usize,
    fft: Fft2,
    /// `√(λ_k / (m_x m_y))` for the embedding eigenvalues `λ_k`, negatives clipped to 0.
    scale: Vec<f64>,
    clipped_fraction: f64,
}

impl std::fmt::Debug for GaussianFieldSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaussianFieldSampler")
            .field("spec", &self.spec)
            .field("lattice", &(self.nx, self.ny))
            .field("embedding", &(self.fft.mx, self.fft.my))
            .field("clipped_fraction", &self.clipped_fraction)
            .finish()
    }
}

impl GaussianFieldSampler {
    pub fn new(spec: GaussianFieldSpec, window: Window) -> Result<Self> {
        spec.validate()?;
        let (nx, ny) = window.lattice_dims(spec.cell)?;
        // torus of at least twice each side
        let (mx, my) = (2 * nx, 2 * ny);
        let fft = Fft2::new(mx, my);
        let mut eig: Vec<Complex64> = Vec::with_capacity(mx * my);
        for ky in 0..my {
            let dy = ky.min(my - ky) as f64 * spec.cell;
            for kx in 0..mx {
                let dx = kx.min(mx - kx) as f64 * spec.cell;
                eig.push(Complex64::new(spec.covariance(dx.hypot(dy)), 0.0));
            }
        }
        fft.forward(&mut eig);
        let total: f64 = eig.iter().map(|c| c.re.abs()).sum();
        let negative: f64 = eig.iter().filter(|c| c.re < 0.0).map(|c| -c.re).sum();
        let clipped_fraction = negative / total;
        if clipped_fraction > MAX_CLIPPED_FRACTION {
            return Err(Error::EmbeddingFailure(clipped_fraction));
        }
        if clipped_fraction > 0.0 {
            log::debug!("circulant embedding clipped {clipped_fraction:.3e} of spectral mass");
        }
        let norm = (mx * my) as f64;
        let scale = eig.iter().map(|c| (c.re.max(0.0) / norm).sqrt()).collect();
        Ok(GaussianFieldSampler { spec, window, nx, ny, fft, scale, clipped_fraction })
    }

    pub fn spec(&self) -> &GaussianFieldSpec {
        &self.spec
    }

    /// Fraction of spectral mass removed by clipping; zero when the embedding is exact.
    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    /// Two independent field realisations (real and imaginary parts of one transform).
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (FieldLattice, FieldLattice) {
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        self.fft.forward(&mut buf);
        let mut first = Vec::with_capacity(self.nx * self.ny);
        let mut second = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let c = buf[iy * self.fft.mx + ix];
                first.push(self.spec.mean + c.re);
                second.push(self.spec.mean + c.im);
            }
        }
        let lattice = |values| FieldLattice {
            window: self.window,
            nx: self.nx,
            ny: self.ny,
            cell: self.spec.cell,
            values,
        };
        (lattice(first), lattice(second))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldLattice {
        self.sample_pair(rng).0
    }
}

/// One realisation of the field on the window lattice.
pub fn simulate_gaussian_field<R: Rng + ?Sized>(
    spec: GaussianFieldSpec,
    window: Window,
    rng: &mut R,
) -> Result<FieldLattice> {
    Ok(GaussianFieldSampler::new(spec, window)?.sample(rng))
}
