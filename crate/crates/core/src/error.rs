use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected}, got {actual}")]
    GridMismatch { expected: String, actual: String },

    #[error("field length {actual} does not match grid size {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("initial data evaluated to {value} at {coordinates:?}")]
    NonFiniteInitial { coordinates: Vec<f64>, value: f64 },

    #[error("initial data does not vanish on the boundary: u0({coordinates:?}) = {value}")]
    BoundaryNonzero { coordinates: Vec<f64>, value: f64 },

    #[error("initial data {data} is not defined in dimension {dim}")]
    InitialDimension { data: String, dim: usize },

    #[error("time step must be nonnegative and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error(
        "positivity violated at index {index}: {value} from a nonnegative input (tolerance {tolerance})"
    )]
    PositivityViolation {
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("dense matrix of size {size} exceeds the cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
