//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two operands (or an operand and a required shape) have incompatible
    /// dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix failed a validity check at construction.
    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    /// Physical or numerical parameters outside their valid domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The integrator produced a non-finite entry; carries the time at which
    /// it was first observed.
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    /// A matrix handed to the X-state fast path has off-X entries beyond
    /// tolerance; carries the largest offender magnitude.
    #[error("matrix is not X-structured: largest off-X entry {max_offender:.3e} exceeds tolerance {tolerance:.3e}")]
    NotXStructured { max_offender: f64, tolerance: f64 },

    /// The spin-flipped spectrum contains a negative eigenvalue beyond the
    /// noise tolerance, signalling an invalid input state.
    #[error("negative eigenvalue {value:.3e} below tolerance in concurrence computation")]
    NegativeEigenvalue { value: f64 },

    /// A sweep row failed; carries the grid point for the abort message.
    #[error("run aborted at alpha_sq = {alpha_sq}: {source}")]
    RunAborted { alpha_sq: f64, source: Box<Error> },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Finite and strictly positive, or an InvalidParameter error.
pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Finite and non-negative, or an InvalidParameter error.
pub(crate) fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be non-negative and finite, got {value}"
        )))
    }
}
