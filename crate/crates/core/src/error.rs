use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the function domain: {0}")]
    DomainViolation(String),

    #[error("function is not differentiable at the requested point")]
    NonDifferentiablePoint,

    #[error("numerical divergence at step {step}")]
    NumericalDivergence { step: usize },

    #[error("insufficient samples: {retained} retained out of {drawn}")]
    InsufficientSamples { retained: usize, drawn: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
