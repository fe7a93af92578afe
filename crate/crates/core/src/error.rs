use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("theta = {theta} outside the admissible range {range}")]
    ThetaOutOfRange { theta: f64, range: String },

    #[error("criterion not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("initial data rejected: {0}")]
    InitialData(String),

    #[error("no estimate: {0}")]
    NoEstimate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
