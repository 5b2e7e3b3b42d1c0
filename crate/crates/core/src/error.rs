use thiserror::Error;

use crate::scalar::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {index} does not belong to the domain: {reason}")]
    DomainMismatch { index: usize, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The Gram matrix is singular to the relative threshold.
    #[error("degenerate system: smallest Gram eigenvalue {smallest:e}, largest {largest:e}")]
    DegenerateSystem { smallest: f64, largest: f64 },

    #[error("iterative fit did not converge after {iterations} iterations (last relative change {last_change:e})")]
    Convergence {
        iterations: usize,
        last_change: f64,
        last_iterate: Vec<C64>,
    },

    #[error("size guard exceeded: {what} is {actual}, limit {limit}")]
    Guard {
        what: String,
        actual: u128,
        limit: u128,
    },

    #[error("premise failed: {0}")]
    Premise(String),

    #[error("linear program: {0}")]
    LinearProgram(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
