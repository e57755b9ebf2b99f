use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("angle {0} rad is outside [0, pi/2]")]
    AngleOutOfRange(f64),

    #[error("chain of {len} streams exceeds the {n_antennas} available degrees of freedom")]
    DegreesOfFreedomExceeded { len: usize, n_antennas: usize },

    #[error("no contenders")]
    NoContenders,

    #[error("instance too large for exhaustive search: {size} clients (limit {limit})")]
    InstanceTooLarge { size: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfiguration(msg.into())
    }

    pub(crate) fn channel(msg: impl Into<String>) -> Self {
        Error::InvalidChannel(msg.into())
    }
}
