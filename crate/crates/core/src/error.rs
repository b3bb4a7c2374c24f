use thiserror::Error;

/// Errors raised by the estimators and their supporting primitives.
///
/// A mechanism returning `FAIL` is not an error; see [`crate::Outcome`].
#[derive(Debug, Error, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    #[error("matrix is singular (smallest eigenvalue below relative threshold)")]
    SingularMatrix,

    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("every histogram bin was suppressed")]
    EmptyRelease,

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("private estimation failed: {0}")]
    EstimationFailed(String),

    #[error("exact Tukey depth is only implemented for d <= 2, got d = {0}")]
    UnsupportedDimension(usize),

    #[error("grid has {cells} cells, above the cap of {cap}")]
    GridTooLarge { cells: u128, cap: u64 },

    #[error("no grid cell reaches the minimum depth")]
    EmptySupport,

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("bad data shape: {0}")]
    BadShape(String),

    #[error("could not project onto the good set")]
    ProjectionFailed,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
