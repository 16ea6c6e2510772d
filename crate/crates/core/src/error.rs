//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Physical parameters violate an invariant (non-normalized populations,
    /// non-positive detunings, degenerate Stokes shift, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Mismatched grids, non-normalized modes, incompatible shapes.
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// A numerical operation failed (NaN in propagation, zero denominator,
    /// non-convergent refinement, retry cap exceeded).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Count data violate the record invariants or a required setting is absent.
    #[error("count data: {0}")]
    Counts(String),

    /// Malformed configuration or data file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
