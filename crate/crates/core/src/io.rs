//! Pattern CSV files, JSON configs and run manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::deviation::DeviationKind;
use crate::error::{Error, Result};
use crate::estimators::{EdgeCorrection, MarkTestFunction, Transformation};
use crate::harness::StudyConfig;
use crate::mctest::{T0Mode, TestConfig};
use crate::models::ModelSpec;
use crate::pattern::{MarkedPattern, RGrid, Window};
use crate::residuals::{ScalingKind, EPS_DENOM};

#[derive(Debug, Deserialize)]
struct Row {
    x: f64,
    y: f64,
    mark: f64,
}

/// Read a `x,y,mark` CSV. Row `k` (1-based, after the header) becomes point `k − 1`.
pub fn read_pattern_csv<R: Read>(input: R, window: Window) -> Result<MarkedPattern> {
    window.validate()?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "mark"] {
        return Err(Error::Parse { line: 1, msg: format!("expected header x,y,mark, got {}", headers.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut points = Vec::new();
    let mut marks = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let row: Row = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if !(row.x.is_finite() && row.y.is_finite() && row.mark.is_finite()) {
            return Err(Error::Parse { line, msg: "non-finite value".into() });
        }
        if row.mark < 0.0 {
            return Err(Error::NegativeMark { line });
        }
        if !window.contains(row.x, row.y) {
            return Err(Error::OutsideWindow { line, x: row.x, y: row.y });
        }
        points.push([row.x, row.y]);
        marks.push(row.mark);
    }
    MarkedPattern::new(points, marks, window)
}

pub fn parse_pattern_csv(path: &Path, window: Window) -> Result<MarkedPattern> {
    read_pattern_csv(File::open(path)?, window)
}

/// Write `x,y,mark` with 17 significant digits, enough to recover every double exactly.
pub fn write_pattern_csv<W: Write>(pattern: &MarkedPattern, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "x,y,mark")?;
    for (p, m) in pattern.points().iter().zip(pattern.marks()) {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", p[0], p[1], m)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_pattern_csv(pattern: &MarkedPattern, path: &Path) -> Result<()> {
    write_pattern_csv(pattern, File::create(path)?)
}

/// Deserialize a JSON document, rejecting unknown keys where the target type does.
pub fn parse_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn parse_study_config(path: &Path) -> Result<StudyConfig> {
    let c: StudyConfig = parse_config(path)?;
    c.validate()?;
    Ok(c)
}

pub fn parse_model_spec(path: &Path) -> Result<ModelSpec> {
    parse_config(path)
}

fn default_f() -> MarkTestFunction {
    MarkTestFunction::M1
}
fn default_edge() -> EdgeCorrection {
    EdgeCorrection::Translational
}
fn default_transformation() -> Transformation {
    Transformation::SqrtOverPi
}
fn default_scaling() -> ScalingKind {
    ScalingKind::DirectionalQuantile
}
fn default_deviation() -> DeviationKind {
    DeviationKind::Supremum
}
fn default_r_max() -> f64 {
    25.0
}
fn default_step() -> f64 {
    0.25
}
fn default_s() -> usize {
    999
}
fn default_t0_mode() -> T0Mode {
    T0Mode::Analytic
}
fn default_eps() -> f64 {
    EPS_DENOM
}

/// On-disk form of a single test: the observation window plus every test setting, with
/// defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfigFile {
    pub window: Window,
    #[serde(default = "default_f")]
    pub f: MarkTestFunction,
    #[serde(default = "default_edge")]
    pub edge: EdgeCorrection,
    #[serde(default = "default_transformation")]
    pub transformation: Transformation,
    #[serde(default = "default_scaling")]
    pub scaling: ScalingKind,
    #[serde(default = "default_deviation")]
    pub deviation: DeviationKind,
    #[serde(default)]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// `[a, b]`; the whole grid when absent.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t0_mode")]
    pub t0_mode: T0Mode,
    /// Scaling denominators below this are masked. Only the built-in value is supported.
    #[serde(default = "default_eps")]
    pub eps_denom: f64,
}

impl TestConfigFile {
    /// Copy with every default written out, for the manifest.
    pub fn resolved(&self) -> TestConfigFile {
        let mut c = self.clone();
        c.interval = Some(c.interval.unwrap_or([c.r_min, c.r_max]));
        c
    }

    pub fn to_test_config(&self) -> Result<(Window, TestConfig)> {
        self.window.validate()?;
        if self.eps_denom != EPS_DENOM {
            return Err(Error::InvalidConfig(format!(
                "eps_denom is fixed at {EPS_DENOM:e}, got {:e}",
                self.eps_denom
            )));
        }
        let grid = RGrid::new(self.r_min, self.r_max, self.step)?;
        let [a, b] = self.interval.unwrap_or([self.r_min, self.r_max]);
        let interval = grid.sub_interval(a, b)?;
        let config = TestConfig {
            f: self.f,
            edge: self.edge,
            transformation: self.transformation,
            scaling: self.scaling,
            deviation: self.deviation,
            grid,
            interval,
            s: self.s,
            seed: self.seed,
            t0_mode: self.t0_mode,
        };
        config.validate()?;
        Ok((self.window, config))
    }
}

pub fn parse_test_config(path: &Path) -> Result<TestConfigFile> {
    let c: TestConfigFile = parse_config(path)?;
    c.to_test_config()?;
    Ok(c)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Record of one CLI run: enough to reproduce its outputs exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub replicate_seeds: Vec<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// sha256 of each input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of each output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn start<C: Serialize>(subcommand: &str, config: &C, seed: u64) -> Result<Self> {
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            replicate_seeds: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.outputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn finish_and_write(mut self, path: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &self)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }
}
