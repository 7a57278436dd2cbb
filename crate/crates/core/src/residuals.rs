//! Pointwise null summaries and the raw, studentised, quantile and directional-quantile
//! residuals built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{FunctionEstimate, RGrid};

/// Denominators below this are treated as zero and their grid points masked.
pub const EPS_DENOM: f64 = 1e-12;

/// Below this many functions the 2.5% order statistics are flagged as unreliable.
const MIN_RELIABLE_COUNT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullSource {
    AnalyticT0,
    Simulated,
}

/// Pointwise summary of the test function under the null model.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDistribution {
    pub grid: RGrid,
    /// `T₀(r)`.
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub q_lower: Vec<f64>,
    pub q_upper: Vec<f64>,
    pub source: NullSource,
    pub count: usize,
}

impl NullDistribution {
    pub fn quantiles_reliable(&self) -> bool {
        self.count >= MIN_RELIABLE_COUNT
    }
}

/// Rank `k = ⌈0.025 · count⌉` of the order statistics used as the 2.5% quantiles.
pub fn quantile_rank(count: usize) -> usize {
    (count * 25).div_ceil(1000)
}

/// Summarise `functions` pointwise; `t0` becomes the mean field.
pub fn build_null_distribution(
    functions: &[FunctionEstimate],
    t0: &FunctionEstimate,
) -> Result<NullDistribution> {
    let grid = *t0.grid();
    if functions.iter().any(|f| !f.grid().same_as(&grid)) {
        return Err(Error::IncompatibleGrids);
    }
    let rows: Vec<&[f64]> = functions.iter().map(|f| f.values()).collect();
    null_from_rows(&rows, t0.values(), grid, NullSource::AnalyticT0)
}

pub(crate) fn null_from_rows(
    rows: &[&[f64]],
    t0: &[f64],
    grid: RGrid,
    source: NullSource,
) -> Result<NullDistribution> {
    let count = rows.len();
    if count < 2 {
        return Err(Error::InvalidConfig(format!(
            "null distribution needs at least 2 functions, got {count}"
        )));
    }
    if t0.len() != grid.len() || rows.iter().any(|r| r.len() != grid.len()) {
        return Err(Error::IncompatibleGrids);
    }
    if count < MIN_RELIABLE_COUNT {
        log::warn!("quantiles unreliable: only {count} functions in the null sample");
    }
    let k = quantile_rank(count);
    let mut variance = Vec::with_capacity(grid.len());
    let mut q_lower = Vec::with_capacity(grid.len());
    let mut q_upper = Vec::with_capacity(grid.len());
    let mut column = vec![0.0; count];
    for j in 0..grid.len() {
        for (c, row) in column.iter_mut().zip(rows) {
            *c = row[j];
        }
        // shifted two-pass sums; exact zero for constant columns
        let shift = column[0];
        let (s1, s2) = column.iter().fold((0.0, 0.0), |(a, b), &v| {
            let d = v - shift;
            (a + d, b + d * d)
        });
        let var = (s2 - s1 * s1 / count as f64) / (count - 1) as f64;
        variance.push(var.max(0.0));
        let (_, lo, _) = column.select_nth_unstable_by(k - 1, f64::total_cmp);
        q_lower.push(*lo);
        let (_, hi, _) = column.select_nth_unstable_by(count - k, f64::total_cmp);
        q_upper.push(*hi);
    }
    Ok(NullDistribution {
        grid,
        mean: t0.to_vec(),
        variance,
        q_lower,
        q_upper,
        source,
        count,
    })
}

/// Which residual construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScalingKind {
    Raw,
    Studentised,
    Quantile,
    DirectionalQuantile,
}

impl ScalingKind {
    pub const ALL: [ScalingKind; 4] = [
        ScalingKind::Raw,
        ScalingKind::Studentised,
        ScalingKind::Quantile,
        ScalingKind::DirectionalQuantile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalingKind::Raw => "raw",
            ScalingKind::Studentised => "st",
            ScalingKind::Quantile => "q",
            ScalingKind::DirectionalQuantile => "qdir",
        }
    }
}

impl fmt::Display for ScalingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ScalingKind::Raw),
            "st" | "studentised" | "studentized" => Ok(ScalingKind::Studentised),
            "q" | "quantile" => Ok(ScalingKind::Quantile),
            "qdir" | "directional-quantile" => Ok(ScalingKind::DirectionalQuantile),
            other => Err(Error::InvalidConfig(format!("unknown scaling '{other}'"))),
        }
    }
}

impl TryFrom<String> for ScalingKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScalingKind> for String {
    fn from(k: ScalingKind) -> String {
        k.name().to_string()
    }
}

/// Per-r denominators for positive and negative residuals, plus the mask they imply.
///
/// The mask depends only on the null distribution, so it is identical for the data and
/// every simulated function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingWeights {
    kind: ScalingKind,
    positive: Vec<f64>,
    negative: Vec<f64>,
    mask: Vec<bool>,
}

impl ScalingWeights {
    pub fn new(null: &NullDistribution, kind: ScalingKind) -> Self {
        let len = null.grid.len();
        let (positive, negative): (Vec<f64>, Vec<f64>) = match kind {
            ScalingKind::Raw => (vec![1.0; len], vec![1.0; len]),
            ScalingKind::Studentised => {
                let sd: Vec<f64> = null.variance.iter().map(|v| v.sqrt()).collect();
                (sd.clone(), sd)
            }
            ScalingKind::Quantile => {
                let spread: Vec<f64> =
                    null.q_upper.iter().zip(&null.q_lower).map(|(u, l)| u - l).collect();
                (spread.clone(), spread)
            }
            ScalingKind::DirectionalQuantile => (
                null.q_upper.iter().zip(&null.mean).map(|(u, t0)| (u - t0).abs()).collect(),
                null.q_lower.iter().zip(&null.mean).map(|(l, t0)| (l - t0).abs()).collect(),
            ),
        };
        let mask = positive
            .iter()
            .zip(&negative)
            .map(|(p, n)| !(*p >= EPS_DENOM && *n >= EPS_DENOM))
            .collect();
        ScalingWeights { kind, positive, negative, mask }
    }

    pub fn kind(&self) -> ScalingKind {
        self.kind
    }

    /// `true` where the grid point is excluded.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(j, _)| j).collect()
    }

    /// Scale raw residuals `d` in place; masked entries are set to zero.
    pub fn apply(&self, d: &mut [f64]) {
        for (j, v) in d.iter_mut().enumerate() {
            *v = if self.mask[j] {
                0.0
            } else if *v >= 0.0 {
                *v / self.positive[j]
            } else {
                *v / self.negative[j]
            };
        }
    }
}

/// A residual function with the grid points excluded from deviation measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub values: FunctionEstimate,
    pub mask: Vec<bool>,
}

impl Residuals {
    pub fn masked_indices(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(j, _)| j).collect()
    }
}

/// Residual of `t` against the null mean, scaled according to `scaling`.
pub fn compute_residuals(
    t: &FunctionEstimate,
    null: &NullDistribution,
    scaling: ScalingKind,
) -> Result<Residuals> {
    if !t.grid().same_as(&null.grid) {
        return Err(Error::IncompatibleGrids);
    }
    let weights = ScalingWeights::new(null, scaling);
    if weights.mask().iter().all(|m| *m) {
        return Err(Error::DegenerateScaling);
    }
    let mut d: Vec<f64> = t.values().iter().zip(&null.mean).map(|(a, b)| a - b).collect();
    weights.apply(&mut d);
    Ok(Residuals {
        values: FunctionEstimate::new(*t.grid(), d)?,
        mask: weights.mask().to_vec(),
    })
}
