use thiserror::Error;

/// Errors raised by the sampling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of an operation (bad dimension,
    /// unsorted spectrum, non-PSD matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix fails a structural invariant (not Hermitian, not unitary).
    #[error("structural error: {0}")]
    Structural(String),

    /// Triangle data that cannot come from a valid Rayleigh triangle.
    #[error("inconsistent triangle: {0}")]
    Inconsistency(String),

    /// A caller-side precondition was not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Malformed input text, with the location of the problem.
    #[error("parse error: {0}")]
    Parse(String),

    /// Too few samples for a statistic to be meaningful.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
