//! Error type shared by every module in the crate.

use thiserror::Error;

/// Failure modes of design, compilation, and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine could not meet its accuracy contract. Carries the
    /// estimated residual so callers can report how far off the result is.
    #[error("numerical tolerance not met in {context}: residual estimate {residual:.3e}")]
    Numerical { context: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
