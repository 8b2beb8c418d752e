use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The data do not carry enough information for a statistic (zero variance, all ties).
    #[error("degenerate data: {0}")]
    Degenerate(String),
    /// A numerical routine failed (non-convergence, non-finite result).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A permutation plan cannot be carried out as requested.
    #[error("permutation plan error: {0}")]
    Plan(String),
    /// Unknown scenario in the registry.
    #[error("registry error: {0}")]
    Registry(String),
    /// Inconsistent configuration (method/layout mismatch, empty grids, ...).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
