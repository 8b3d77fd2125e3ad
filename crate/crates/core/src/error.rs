use thiserror::Error;

/// Errors raised by the lab.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A recursion or reduction produced a value that cannot be trusted.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A persisted table or dump could not be parsed.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
