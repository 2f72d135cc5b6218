use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("ragged horizon: signal `{id}` has {found} samples, expected {expected}")]
    RaggedHorizon {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("signal `{id}` is missing the sample at time {time}")]
    MissingSample { id: String, time: usize },

    #[error("signal `{id}` has a duplicate row at time {time}")]
    DuplicateSample { id: String, time: usize },

    #[error("non-binary label `{0}` (expected 1 or -1)")]
    NonBinaryLabel(String),

    #[error("signal `{id}` changes label between rows")]
    InconsistentLabel { id: String },

    #[error("non-finite sample in signal `{id}` at time {time}")]
    NonFinite { id: String, time: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset needs at least one positive and one negative signal")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time {t} is out of range [0, {max}]")]
    TimeOutOfRange { t: usize, max: usize },

    /// The formula cannot be decided on the available samples.
    #[error("formula horizon exceeds prefix length: needs samples up to {needed}, prefix ends at {last}")]
    HorizonExceedsPrefix { needed: usize, last: usize },

    #[error("component x{component} does not exist (signal dimension {dimension})")]
    ComponentOutOfRange { component: usize, dimension: usize },

    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("invalid artifact: {0}")]
    Artifact(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        !matches!(
            self,
            Error::Config(_) | Error::Usage(_) | Error::Syntax { .. }
        )
    }
}
