use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsorted input: power levels must be in descending order")]
    Unsorted,

    #[error("gamma {gamma} outside profile range [{lo}, {hi}]")]
    OutOfRange { gamma: f64, lo: f64, hi: f64 },

    #[error("empty search grid")]
    EmptyGrid,

    #[error("fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("config error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config validation: {0}")]
    ConfigInvalid(String),

    #[error("artifact format: {0}")]
    Artifact(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
