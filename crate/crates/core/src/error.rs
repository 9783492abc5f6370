use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Too few studies to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An iterative method (series, continued fraction, quadrature) did not
    /// reach its tolerance within the allotted budget.
    #[error("numeric failure: {0}")]
    Convergence(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
