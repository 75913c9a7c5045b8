use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible contraction parameters: {0}")]
    Infeasible(String),

    #[error("time {t} outside noise profile span [0, {end}]; extrapolation is not allowed")]
    Extrapolation { t: f64, end: f64 },

    #[error("unattainable: {0}")]
    Unattainable(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("objective returned non-finite value {value} at {point:?}")]
    ObjectiveDomain { point: Vec<f64>, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
