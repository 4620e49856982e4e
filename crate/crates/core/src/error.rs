use thiserror::Error;

use crate::sphere::ZonalField;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The largest exponent seen while forming `exp(..)` sums.
    #[error("exponential overflow (max exponent {max_exponent})")]
    Overflow { max_exponent: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Carries the last iterate so callers can still inspect or report on it.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        last: Box<ZonalField>,
    },

    #[error("singular kernel input: r = s = {0}")]
    SingularInput(f64),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("classification criteria disagree: {0}")]
    Inconsistent(String),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
