//! Global deviation measures over an interval of distances.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::RGrid;
use crate::residuals::Residuals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DeviationKind {
    /// `max |d(r)|` over the interval.
    Supremum,
    /// `Σ d(r)² · step` over the interval.
    IntegralL2,
}

impl DeviationKind {
    pub const ALL: [DeviationKind; 2] = [DeviationKind::Supremum, DeviationKind::IntegralL2];

    pub fn name(self) -> &'static str {
        match self {
            DeviationKind::Supremum => "sup",
            DeviationKind::IntegralL2 => "int",
        }
    }
}

impl fmt::Display for DeviationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DeviationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" | "supremum" => Ok(DeviationKind::Supremum),
            "int" | "integral" | "l2" | "integral-l2" => Ok(DeviationKind::IntegralL2),
            other => Err(Error::InvalidConfig(format!("unknown deviation measure '{other}'"))),
        }
    }
}

impl TryFrom<String> for DeviationKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DeviationKind> for String {
    fn from(k: DeviationKind) -> String {
        k.name().to_string()
    }
}

/// Deviation of `values[range]`, skipping masked points. `None` if nothing is left.
pub(crate) fn measure_slice(
    values: &[f64],
    mask: &[bool],
    range: Range<usize>,
    step: f64,
    kind: DeviationKind,
) -> Option<f64> {
    let mut any = false;
    let mut acc = 0.0f64;
    for j in range {
        if mask[j] {
            continue;
        }
        any = true;
        let d = values[j];
        match kind {
            DeviationKind::Supremum => acc = acc.max(d.abs()),
            DeviationKind::IntegralL2 => acc += d * d * step,
        }
    }
    any.then_some(acc)
}

pub fn deviation_measure(
    residuals: &Residuals,
    interval: &RGrid,
    kind: DeviationKind,
) -> Result<f64> {
    let grid = residuals.values.grid();
    let range = grid.index_range(interval)?;
    measure_slice(residuals.values.values(), &residuals.mask, range, grid.step(), kind).ok_or(
        Error::EmptyInterval { r_min: interval.r_min(), r_max: interval.r_max() },
    )
}
