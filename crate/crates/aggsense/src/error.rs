use std::io;
use std::path::PathBuf;

use aggsense_core::Error as CoreError;

/// Everything the driver can fail with, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
    #[error("training failed: {0}")]
    Training(CoreError),
    #[error(transparent)]
    Core(CoreError),
    #[error("{failed} of {total} experiment cells failed")]
    CellsFailed { failed: usize, total: usize, code: i32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn format(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data or file format, 3 training failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Format { .. } => 2,
            Error::Training(_) => 3,
            Error::Core(e) if e.is_training_failure() => 3,
            Error::Core(CoreError::Config { .. }) => 1,
            Error::Core(_) => 2,
            Error::CellsFailed { code, .. } => *code,
        }
    }
}

impl From<CoreError> for Error {
    fn from(e: CoreError) -> Self {
        if e.is_training_failure() {
            Error::Training(e)
        } else {
            Error::Core(e)
        }
    }
}
