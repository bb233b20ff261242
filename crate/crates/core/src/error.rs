use std::fmt;

/// Errors shared across the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's contract (bad shape, bad range, ...).
    InvalidInput(String),
    /// A neuron id or named entity does not exist.
    NotFound(String),
    /// A mathematical property that must hold was violated; indicates a bug
    /// in the caller's setup or in the library itself.
    PropertyViolation(String),
    /// A stated precondition does not hold for the given inputs.
    Precondition(String),
    /// Filesystem failure.
    Io(String),
    /// Malformed file contents; the message carries line/field diagnostics.
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NotFound(msg) => write!(f, "not found: {msg}"),
            Error::PropertyViolation(msg) => write!(f, "property violation: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
