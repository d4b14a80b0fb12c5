//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QtoaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QtoaError {
    /// Parameters outside the documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A quadrature failed its mandatory refinement test.
    #[error("quadrature did not converge ({context}): change {change:.3e} exceeds tolerance {tol:.3e}")]
    QuadratureNotConverged {
        context: String,
        change: f64,
        tol: f64,
    },

    /// The tridiagonal QL iteration stalled.
    #[error("eigensolver failed after {iterations} sweeps on eigenvalue {index}; matrix norm {norm:.3e}")]
    EigensolverFailed {
        index: usize,
        iterations: usize,
        norm: f64,
    },

    /// Even double-double arithmetic cannot resolve the requested problem.
    #[error("matrix norm {norm:.3e} exceeds what {precision} arithmetic can resolve at tolerance {tol:.1e}")]
    PrecisionExhausted {
        norm: f64,
        precision: &'static str,
        tol: f64,
    },
}

impl QtoaError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        QtoaError::InvalidInput(msg.into())
    }

    /// True for errors caused by bad inputs rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(self, QtoaError::InvalidInput(_))
    }
}
