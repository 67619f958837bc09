use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on user-supplied arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Linear algebra broke down (non-positive-definite matrix after the
    /// jitter policy, all optimizer starts failing, and the like).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Every objective evaluation came back -inf, so there is nothing to
    /// maximize.
    #[error("no signal: {0}")]
    NoSignal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }
}
