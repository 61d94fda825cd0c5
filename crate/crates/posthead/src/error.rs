use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] posthead_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Whether the error stems from bad configuration or input data, as
    /// opposed to a failure while running.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Format { .. } | Error::Record { .. } | Error::Config(_) => true,
            Error::Io { .. } => true,
            Error::Core(e) => matches!(
                e,
                posthead_core::Error::Validation(_)
                    | posthead_core::Error::InvalidExample { .. }
                    | posthead_core::Error::Config(_)
                    | posthead_core::Error::NonFinite { .. }
            ),
            Error::Json(_) | Error::Csv(_) => false,
        }
    }
}
