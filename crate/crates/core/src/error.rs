use thiserror::Error;

/// Errors raised by the estimation, testing and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid r-grid: {0}")]
    InvalidGrid(String),
    #[error("pattern too small: need at least 2 points, got {0}")]
    PatternTooSmall(usize),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("cell size {cell} incompatible with window")]
    CellIncompatible { cell: f64 },
    #[error("degenerate overlap: offset ({dx}, {dy}) leaves no window intersection")]
    DegenerateOverlap { dx: f64, dy: f64 },
    #[error("degenerate normalizer: estimated c_f is zero")]
    DegenerateNormalizer,
    #[error("transformation domain violation at r = {r}: value {value}")]
    TransformDomain { r: f64, value: f64 },
    #[error("incompatible grids")]
    IncompatibleGrids,
    #[error("degenerate scaling: every grid point in the interval is masked")]
    DegenerateScaling,
    #[error("empty interval: no unmasked grid points in [{r_min}, {r_max}]")]
    EmptyInterval { r_min: f64, r_max: f64 },
    #[error("missing estimates for leave-one-out T0")]
    MissingEstimates,
    #[error("unsupported attraction regime: theta = {0} < 0")]
    UnsupportedAttraction(f64),
    #[error("placement failure: point {k} not placed after {proposals} proposals")]
    PlacementFailure { k: usize, proposals: usize },
    #[error("embedding failure: clipped spectral mass fraction {0:.3e} exceeds 1e-3")]
    EmbeddingFailure(f64),
    #[error("degenerate intensity: field values do not define a finite positive intensity")]
    DegenerateIntensity,
    #[error("intensity underflow at point ({x}, {y})")]
    IntensityUnderflow { x: f64, y: f64 },
    #[error("negative argument: {0}")]
    NegativeArgument(f64),
    #[error("root finding failed: {0}")]
    RootNotBracketed(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("negative mark at line {line}")]
    NegativeMark { line: usize },
    #[error("point outside window at line {line}: ({x}, {y})")]
    OutsideWindow { line: usize, x: f64, y: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateOverlap { .. }
                | Error::DegenerateNormalizer
                | Error::TransformDomain { .. }
                | Error::DegenerateScaling
                | Error::PlacementFailure { .. }
                | Error::EmbeddingFailure(_)
                | Error::DegenerateIntensity
                | Error::IntensityUnderflow { .. }
                | Error::RootNotBracketed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
