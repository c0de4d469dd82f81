use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series length {len} is too short (need at least {min})")]
    InvalidLength { len: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid recurrence threshold {0}: must lie in (0, 1]")]
    InvalidThreshold(f64),

    #[error("window size {window} exceeds series length {len}")]
    InvalidWindow { window: usize, len: usize },

    #[error("block corner ({row}, {col}) with side {side} is outside a {size}x{size} plot")]
    Index {
        row: usize,
        col: usize,
        side: usize,
        size: usize,
    },

    #[error("recurrence plot of size {size} is smaller than microstate side {side}")]
    MatrixTooSmall { size: usize, side: usize },

    #[error("{placements} placements exceed the exhaustive enumeration limit of {limit}")]
    TooLarge { placements: u64, limit: u64 },

    #[error("logistic orbit left [0, 1] at iteration {iteration} (x = {value})")]
    NumericDomain { iteration: usize, value: f64 },

    #[error("Lorenz integration diverged at step {step}")]
    NumericOverflow { step: usize },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("recurrence plot is not symmetric with unit diagonal at ({0}, {1})")]
    InvalidPlot(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
