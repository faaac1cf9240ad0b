use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}: invalid argument: {msg}")]
    InvalidArgument { module: &'static str, msg: String },

    #[error("{module}: dimension mismatch: {msg}")]
    DimensionMismatch { module: &'static str, msg: String },

    #[error("metrics: noise covariance is singular at subcarrier {subcarrier}")]
    SingularNoiseCovariance { subcarrier: usize },

    #[error("{module}: internal error: {msg}")]
    Internal { module: &'static str, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("harness: I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("harness: trial {trial} at {snr_db} dB failed: {source}")]
    Trial {
        snr_db: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(module: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidArgument {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn dims(module: &'static str, msg: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn internal(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Internal {
            module,
            msg: msg.into(),
        }
    }
}
