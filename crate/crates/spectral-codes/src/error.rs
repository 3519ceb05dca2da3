//! Error type shared across the library.

use thiserror::Error;

/// Library-wide error enum.
///
/// `Domain` means the inputs describe something the requested operation is not
/// defined for (a non-projection, dependent generators, an oversize lattice).
/// `Numerical` means the inputs were formally valid but a tolerance was
/// breached during computation (a trace-preservation certificate, a fit floor).
/// The distinction matters to callers that map failures to process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { asymmetry: f64, tol: f64 },

    #[error("matrix is not a projection ({what}): defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotProjection {
        what: &'static str,
        defect: f64,
        tol: f64,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for tolerance breaches during computation, as opposed to
    /// malformed or out-of-domain inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
