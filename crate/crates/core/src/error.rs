use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("input of {len} points exceeds the capacity cap of {cap}")]
    Capacity { len: usize, cap: usize },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("malformed range: lo is greater than hi")]
    MalformedRange,

    #[error("error threshold {0} was not profiled")]
    MissingSample(u64),

    #[error("no candidate satisfies the constraint; best achievable {metric} is {best}")]
    Infeasible { metric: &'static str, best: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("index file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
