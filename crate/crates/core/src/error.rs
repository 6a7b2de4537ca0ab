use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("improper posterior: n_k = {0} must be positive")]
    ImproperPosterior(f64),

    #[error("arm {arm} has {observed} observations but the policy needs {required} before sampling")]
    InsufficientObservations {
        arm: usize,
        observed: u64,
        required: u64,
    },

    #[error("horizon {horizon} is shorter than the initial phase of {initial} rounds")]
    HorizonTooShort { horizon: u64, initial: u64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("cannot fit growth exponent: {0}")]
    Fit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
