use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block {block}: expected {expected_rows}x{expected_cols}, found {rows}x{cols}")]
    Dimension {
        block: &'static str,
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid dimensions (n={n}, m={m}, p={p}): require n >= m >= p >= 1")]
    DimensionOrder { n: usize, m: usize, p: usize },

    #[error("{block} is not positive definite")]
    Definiteness { block: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("cubic is not of the two-positive/one-negative family: {0}")]
    Classification(String),

    #[error("layout {0} requires n = m = p")]
    UnsupportedLayout(&'static str),

    #[error("strategy {strategy} does not apply: {reason}")]
    StrategyMismatch { strategy: String, reason: String },

    #[error("dimension {dim} exceeds the dense oracle cutoff {cutoff}")]
    OverCutoff { dim: usize, cutoff: usize },

    #[error("Lanczos did not converge after {iterations} steps (best estimates {min:e}, {max:e})")]
    NonConvergence {
        iterations: usize,
        min: f64,
        max: f64,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn definiteness(block: impl Into<String>) -> Self {
        Error::Definiteness {
            block: block.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
