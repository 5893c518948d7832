use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Extents of paired or combined tensors disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Non-finite values or a numerical routine that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The request exceeds what the chosen representation can do exactly
    /// (dense size limit, bond budget too small, ...).
    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }
}

pub(crate) fn check_index(index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::OutOfRange { index, len })
    }
}
