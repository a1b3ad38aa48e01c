//! Error type shared by every module in the crate.

use thiserror::Error;

/// Everything that can go wrong while building models or evaluating the
/// exact, asymptotic, and simulation routes.
#[derive(Debug, Error)]
pub enum Error {
    /// The increment description is not a probability distribution
    /// (negative mass, mass sum off one, empty support, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A request is outside the domain where the routine is defined,
    /// e.g. a moment order outside the finite range.
    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    /// The walk is not compatible with the requested operation
    /// (wrong drift sign, missing negative support, infinite variance
    /// where a finite one is required, ...).
    #[error("unsupported walk for this operation: {0}")]
    Unsupported(String),

    /// A quadrature, root finder, or series failed to reach the
    /// requested accuracy within its budget.
    #[error("numerical routine did not converge: {0}")]
    NoConvergence(String),

    /// An internal consistency cross-check failed loudly instead of
    /// returning silently wrong numbers.
    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    /// Malformed JSON model descriptor or configuration.
    #[error("parse error: {0}")]
    Parse(String),

    /// A resource limit (grid size, enumeration size, path budget) was hit.
    #[error("resource limit exceeded: {0}")]
    TooLarge(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
