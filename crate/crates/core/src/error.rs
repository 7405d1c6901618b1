use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter left its admissible range.
    #[error("domain error: {0}")]
    Domain(String),
    /// A required oracle or argument was missing or inconsistent.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Quadrature stopped before reaching its tolerance.
    #[error("quadrature did not converge (partial value {partial:e}, residual {residual:e})")]
    NonConvergence { partial: f64, residual: f64 },
    /// Inner shells of a generator integral do not decay.
    #[error("insufficient regularity at x for this form: {0}")]
    InsufficientRegularity(String),
    #[error("compensator undefined: first moment on |y| < 1 diverges")]
    CompensatorUndefined,
    /// The requested route is not available for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
