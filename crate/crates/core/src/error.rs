use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point or parameter fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The operation is not defined for this object (e.g. a partial of a q = 0 function).
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A caller-supplied argument violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The object is not in a state that allows the operation.
    #[error("invalid state: {0}")]
    State(String),
    /// An experiment configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
