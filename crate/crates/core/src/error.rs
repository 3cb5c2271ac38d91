use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// One or more model-parameter invariants failed.
    #[error("invalid walk parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("invalid walk state: {0}")]
    InvalidState(String),

    #[error("invalid memory schedule: {0}")]
    Schedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation would exceed a configured size cap. Never truncated silently.
    #[error("resource limit exceeded: {what} ({requested} > cap {cap})")]
    ResourceLimit {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
