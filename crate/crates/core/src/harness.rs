//! Power studies: simulate patterns from a model over a sweep of one parameter, run every
//! test variant on each pattern and tally rejections.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deviation::DeviationKind;
use crate::error::{Error, Result};
use crate::estimators::{EdgeCorrection, MarkTestFunction, Transformation};
use crate::mctest::{rank_and_p_value, PermutationEnsemble, T0Mode};
use crate::models::{ModelFamily, ModelSpec, Simulator};
use crate::pattern::{MarkedPattern, RGrid};
use crate::residuals::ScalingKind;
use crate::rng::{self, domain};

/// A named sub-interval of the estimation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedInterval {
    pub name: String,
    pub r_min: f64,
    pub r_max: f64,
}

impl NamedInterval {
    pub fn new(name: &str, r_min: f64, r_max: f64) -> Self {
        NamedInterval { name: name.to_string(), r_min, r_max }
    }

    /// `I1 = [4,8]`, `I2 = [3,15]`, `I3 = [0,25]`.
    pub fn standard() -> Vec<NamedInterval> {
        vec![
            NamedInterval::new("I1", 4.0, 8.0),
            NamedInterval::new("I2", 3.0, 15.0),
            NamedInterval::new("I3", 0.0, 25.0),
        ]
    }
}

/// The model parameter that varies along a power curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl ParameterSweep {
    /// The changing parameter and its grid for `family` in the full study.
    pub fn full(family: ModelFamily) -> ParameterSweep {
        let (name, step, count) = match family {
            ModelFamily::SeqNimpp => ("theta", 0.02, 11),
            ModelFamily::ExpNimcp => ("a", 20.0, 11),
            ModelFamily::ExpPimcp => ("a", 250.0, 11),
            ModelFamily::Gnimcp => ("sigma_eps", 0.5, 13),
            ModelFamily::Gncp => ("sigma_eps", 0.25, 15),
        };
        ParameterSweep {
            parameter: name.to_string(),
            values: (0..count).map(|k| round12(k as f64 * step)).collect(),
        }
    }

    /// Three points of the full grid: first, middle and last.
    pub fn desk(family: ModelFamily) -> ParameterSweep {
        let full = ParameterSweep::full(family);
        let v = &full.values;
        ParameterSweep {
            parameter: full.parameter.clone(),
            values: vec![v[0], v[v.len() / 2], v[v.len() - 1]],
        }
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn default_alpha() -> f64 {
    0.05
}
fn default_step() -> f64 {
    0.25
}
fn default_r_max() -> f64 {
    25.0
}
fn default_replicates() -> usize {
    200
}
fn default_permutations() -> usize {
    199
}
fn default_functions() -> Vec<MarkTestFunction> {
    vec![MarkTestFunction::M1, MarkTestFunction::M1M2, MarkTestFunction::Gamma]
}
fn default_transformations() -> Vec<Transformation> {
    vec![Transformation::Identity, Transformation::SqrtOverPi]
}
fn default_scalings() -> Vec<ScalingKind> {
    ScalingKind::ALL.to_vec()
}
fn default_deviations() -> Vec<DeviationKind> {
    DeviationKind::ALL.to_vec()
}
fn default_edge() -> EdgeCorrection {
    EdgeCorrection::Translational
}
fn default_t0_mode() -> T0Mode {
    T0Mode::Analytic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub model: ModelSpec,
    pub sweep: ParameterSweep,
    /// Simulated patterns per parameter value (`N`).
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Permutations per test (`s`).
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_functions")]
    pub mark_functions: Vec<MarkTestFunction>,
    #[serde(default = "default_transformations")]
    pub transformations: Vec<Transformation>,
    #[serde(default = "default_scalings")]
    pub scalings: Vec<ScalingKind>,
    #[serde(default = "default_deviations")]
    pub deviations: Vec<DeviationKind>,
    #[serde(default = "NamedInterval::standard")]
    pub intervals: Vec<NamedInterval>,
    #[serde(default = "default_edge")]
    pub edge: EdgeCorrection,
    #[serde(default = "default_t0_mode")]
    pub t0_mode: T0Mode,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
}

impl StudyConfig {
    /// Desk-scale study for `family`: `N = 200`, `s = 199`, three parameter values.
    pub fn desk(family: ModelFamily) -> StudyConfig {
        StudyConfig {
            model: ModelSpec::defaults(family),
            sweep: ParameterSweep::desk(family),
            replicates: default_replicates(),
            permutations: default_permutations(),
            alpha: default_alpha(),
            mark_functions: default_functions(),
            transformations: default_transformations(),
            scalings: default_scalings(),
            deviations: default_deviations(),
            intervals: NamedInterval::standard(),
            edge: default_edge(),
            t0_mode: default_t0_mode(),
            r_max: default_r_max(),
            step: default_step(),
            seed: 0,
        }
    }

    /// Switch to the full study: `N = 1000`, `s = 999` and the complete parameter grid.
    pub fn into_full(mut self) -> StudyConfig {
        self.replicates = 1000;
        self.permutations = 999;
        self.sweep = ParameterSweep::full(self.model.family);
        self
    }

    pub fn grid(&self) -> Result<RGrid> {
        RGrid::new(0.0, self.r_max, self.step)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("replicates (N) must be at least 1".into()));
        }
        if self.permutations < 1 {
            return Err(Error::InvalidConfig("permutations (s) must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} not in (0,1)", self.alpha)));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one value".into()));
        }
        let lists = [
            ("mark_functions", self.mark_functions.is_empty()),
            ("transformations", self.transformations.is_empty()),
            ("scalings", self.scalings.is_empty()),
            ("deviations", self.deviations.is_empty()),
            ("intervals", self.intervals.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(Error::InvalidConfig(format!("{name} must not be empty")));
        }
        let grid = self.grid()?;
        for iv in &self.intervals {
            grid.index_range(&grid.sub_interval(iv.r_min, iv.r_max)?)?;
        }
        for &v in &self.sweep.values {
            self.model.with_parameter(&self.sweep.parameter, v)?.validate()?;
        }
        Ok(())
    }

    /// Every combination of the design factors, in a fixed order.
    pub fn variants(&self) -> Vec<Variant> {
        let mut out = Vec::new();
        for &f in &self.mark_functions {
            for &transformation in &self.transformations {
                for &scaling in &self.scalings {
                    for &deviation in &self.deviations {
                        for (interval, _) in self.intervals.iter().enumerate() {
                            out.push(Variant { f, transformation, scaling, deviation, interval });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One test variant; `interval` indexes `StudyConfig::intervals`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub f: MarkTestFunction,
    pub transformation: Transformation,
    pub scaling: ScalingKind,
    pub deviation: DeviationKind,
    pub interval: usize,
}

/// Master seed of replicate `rep` at sweep position `value_index`.
pub fn replicate_seed(master: u64, value_index: usize, rep: usize) -> u64 {
    rng::derive_seed(master, &[domain::REPLICATE, value_index as u64, rep as u64])
}

/// Pattern for one replicate, drawn from its own stream.
pub fn replicate_pattern(sim: &Simulator, seed: u64) -> Result<MarkedPattern> {
    sim.simulate(&mut rng::stream(seed, &[domain::PATTERN]))
}

/// `p̂ = k/N` and its binomial standard error.
pub fn estimate_power(rejections: usize, n: usize) -> Result<(f64, f64)> {
    if n == 0 || rejections > n {
        return Err(Error::InvalidConfig(format!("need 0 ≤ rejections ≤ N, N ≥ 1 (got {rejections}/{n})")));
    }
    let p = rejections as f64 / n as f64;
    Ok((p, (p * (1.0 - p) / n as f64).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub family: ModelFamily,
    pub parameter: String,
    pub value: f64,
    pub f: MarkTestFunction,
    pub transformation: Transformation,
    pub scaling: ScalingKind,
    pub deviation: DeviationKind,
    pub interval: String,
    pub rejections: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub power: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
    /// Replicates excluded at each sweep value because simulation or estimation failed.
    pub failed_replicates: Vec<(f64, usize)>,
}

impl PowerTable {
    /// Rows matching a variant description at one parameter value.
    pub fn find(
        &self,
        value: f64,
        f: MarkTestFunction,
        transformation: Transformation,
        scaling: ScalingKind,
        deviation: DeviationKind,
        interval: &str,
    ) -> Option<&PowerRow> {
        self.rows.iter().find(|r| {
            r.value == value
                && r.f == f
                && r.transformation == transformation
                && r.scaling == scaling
                && r.deviation == deviation
                && r.interval == interval
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reject/accept for every variant on one pattern; `None` where a variant could not be
/// evaluated (for example every interval point masked).
pub fn evaluate_variants(
    pattern: &MarkedPattern,
    config: &StudyConfig,
    variants: &[Variant],
    seed: u64,
) -> Result<Vec<Option<bool>>> {
    let grid = config.grid()?;
    let intervals = config
        .intervals
        .iter()
        .map(|iv| grid.sub_interval(iv.r_min, iv.r_max))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = PermutationEnsemble::new(
        pattern,
        &config.mark_functions,
        config.edge,
        &grid,
        config.permutations,
        seed,
    )?;
    let mut out = vec![None; variants.len()];
    for &f in &config.mark_functions {
        for &h in &config.transformations {
            let family = match ensemble.prepare(f, h, config.t0_mode) {
                Ok(fam) => fam,
                Err(e) => {
                    log::debug!("variant family {f}/{h} skipped: {e}");
                    continue;
                }
            };
            for &scaling in &config.scalings {
                let residuals = family.residuals(scaling);
                for (k, v) in variants.iter().enumerate() {
                    if v.f != f || v.transformation != h || v.scaling != scaling {
                        continue;
                    }
                    out[k] = residuals
                        .deviations(&intervals[v.interval], v.deviation)
                        .ok()
                        .map(|u| rank_and_p_value(&u).1 <= config.alpha);
                }
            }
        }
    }
    Ok(out)
}

/// Run the study. Deterministic given the config (including its seed), whatever the
/// thread count.
pub fn run_power_study(config: &StudyConfig) -> Result<PowerTable> {
    config.validate()?;
    let variants = config.variants();
    let mut rows = Vec::new();
    let mut failed_replicates = Vec::new();
    for (vi, &value) in config.sweep.values.iter().enumerate() {
        let spec = config.model.with_parameter(&config.sweep.parameter, value)?;
        let sim = Simulator::new(spec)?;
        let outcomes: Vec<Option<Vec<Option<bool>>>> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(config.seed, vi, rep);
                let run = replicate_pattern(&sim, seed)
                    .and_then(|p| evaluate_variants(&p, config, &variants, seed));
                match run {
                    Ok(v) => Some(v),
                    Err(e) => {
                        log::warn!("replicate {rep} at {}={value} failed: {e}", config.sweep.parameter);
                        None
                    }
                }
            })
            .collect();
        let failed = outcomes.iter().filter(|o| o.is_none()).count();
        failed_replicates.push((value, failed));
        for (k, v) in variants.iter().enumerate() {
            let mut used = 0;
            let mut rejections = 0;
            for o in outcomes.iter().flatten() {
                if let Some(reject) = o[k] {
                    used += 1;
                    rejections += reject as usize;
                }
            }
            let (power, stderr) = if used > 0 { estimate_power(rejections, used)? } else { (f64::NAN, f64::NAN) };
            rows.push(PowerRow {
                family: spec.family,
                parameter: config.sweep.parameter.clone(),
                value,
                f: v.f,
                transformation: v.transformation,
                scaling: v.scaling,
                deviation: v.deviation,
                interval: config.intervals[v.interval].name.clone(),
                rejections,
                n: used,
                power,
                stderr,
            });
        }
    }
    Ok(PowerTable { rows, failed_replicates })
}
