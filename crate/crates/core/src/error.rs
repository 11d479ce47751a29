use thiserror::Error;

/// Errors raised by the engine.
///
/// The split between `Mismatch`, `Resource` and `Usage` mirrors the exit-code
/// classes of the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// A computed identity or consistency condition does not hold.
    #[error("mathematical mismatch: {0}")]
    Mismatch(String),

    /// A configured bound (shell size, truncation order, enumeration budget) is too small.
    #[error("resource bound exceeded: {0}")]
    Resource(String),

    /// Invalid arguments or unsupported inputs.
    #[error("invalid input: {0}")]
    Usage(String),

    /// Malformed polynomial text.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::Mismatch(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
