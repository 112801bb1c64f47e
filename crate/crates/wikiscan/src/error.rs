use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] wikiscan_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}:{line}: {message}", path.display())]
    Record { path: PathBuf, line: u64, message: String },

    #[error("configuration: {0}")]
    Config(String),

    /// Upstream metadata could not be fetched. Retrying may help.
    #[error("fetch failed for `{title}`: {message} (retryable)")]
    Fetch { title: String, message: String },

    #[error("articleinfo response for `{title}` lacks field `{field}`")]
    Schema { title: String, field: &'static str },

    #[error("unknown article `{0}`")]
    UnknownTitle(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code: 2 configuration, 3 data, 4 upstream.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Fetch { .. } => 4,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Core(wikiscan_core::Error::InvalidArgument(_)) => 2,
            _ => 3,
        }
    }
}
