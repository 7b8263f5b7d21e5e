use thiserror::Error;

/// Errors raised by the denoiser library and its simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input vector carried NaN or infinite entries.
    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },

    /// Lloyd iteration failed to reach a fixed point.
    #[error("Lloyd-Max design for {bits} bits did not converge within {iterations} iterations")]
    NoConvergence { bits: u32, iterations: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
