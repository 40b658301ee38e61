use thiserror::Error;

/// Errors raised by the navigation engine.
///
/// Runtime failures of a trial (immobilization, running out of frontiers)
/// are recorded as outcomes, not errors. The variants here are either
/// configuration problems detected before a run or faults inside a single
/// operation that callers are expected to react to.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("no reachable frontier")]
    NoFrontier,

    #[error("no safe path to target")]
    NoSafePath,

    #[error("safety margin erodes the whole safe set")]
    RobotBoxedIn,

    #[error("safety invariant violated: {0}")]
    SafetyBreach(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
