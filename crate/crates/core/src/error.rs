use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient sample: need {needed} usable points, found {available}")]
    InsufficientSample { needed: usize, available: usize },

    #[error("calibration mismatch: {0}")]
    CalibrationMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Zero nearest-neighbour distances make a log-ratio undefined.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error at line {line}: {message}")]
    Validation { line: usize, message: String },

    #[error("empty input")]
    EmptyInput,

    #[error("{0} has no implicit description to check against")]
    UnsupportedCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
