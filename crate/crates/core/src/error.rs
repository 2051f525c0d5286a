use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("calendar validation failed: {0}")]
    Calendar(String),

    #[error("series `{id}` not found in {dir} and offline mode forbids fetching")]
    NotFound { id: String, dir: PathBuf },

    #[error("transport error fetching `{id}`: {message}")]
    Transport { id: String, message: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("model serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by input data rather than computation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Parse { .. }
                | Error::Calendar(_)
                | Error::NotFound { .. }
                | Error::Transport { .. }
                | Error::Io(_)
                | Error::InvalidSeries(_)
        )
    }
}
