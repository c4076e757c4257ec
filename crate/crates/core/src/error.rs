use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is missing or violates its invariant. `key`
    /// names the offending entry, e.g. `dishwasher.uses_per_day`.
    Config { key: String, reason: String },
    /// Input dimensions disagree.
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A precondition on an argument does not hold.
    Invalid(String),
    /// Training produced a non-finite loss.
    NonFinite { epoch: usize, batch: usize },
    /// A model was queried before it was fitted.
    NotFitted,
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Whether this error came from a failed optimisation rather than bad input.
    pub fn is_training_failure(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config { key, reason } => write!(f, "{key}: {reason}"),
            Error::Shape {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected {expected}, found {found}"),
            Error::Invalid(msg) => f.write_str(msg),
            Error::NonFinite { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
            Error::NotFitted => f.write_str("model is not fitted"),
        }
    }
}

impl core::error::Error for Error {}
