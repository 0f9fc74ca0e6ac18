use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("invalid stepper configuration: {0}")]
    InvalidStepper(String),

    #[error("field has non-zero spatial mean {mean:e}")]
    NonZeroMean { mean: f64 },

    #[error("array has {got} values, grid expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("velocity is not solenoidal (relative divergence {residual:e})")]
    NotSolenoidal { residual: f64 },

    #[error("CFL number {cfl:.4} exceeds 1 at t = {t}")]
    CflViolation { cfl: f64, t: f64 },

    #[error("non-finite coefficient encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("theta lost spectral resolution at t = {t}: outermost shell holds {fraction:.3e} of its L2 norm")]
    ResolutionLost { fraction: f64, t: f64 },

    #[error("profile depends on {found}, expected {expected}")]
    AxisMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("wave vector ({k1}, {k2}) must be non-zero with k1 + k2 = 0")]
    InvalidWaveVector { k1: i64, k2: i64 },

    #[error("mode index {index} exceeds the dealiasing cut {cut}")]
    Unresolvable { index: i64, cut: usize },

    #[error("time series is empty")]
    EmptySeries,

    #[error("the two states coincide (separation {separation:e})")]
    IdenticalStates { separation: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bad snapshot magic bytes")]
    BadMagic,

    #[error("snapshot file is truncated")]
    TruncatedFile,

    #[error("snapshot invariant violated: {0}")]
    InvariantViolation(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("path does not exist: {}", .0.display())]
    MissingPath(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
