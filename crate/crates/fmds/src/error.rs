//! Error taxonomy shared across the crate.
//!
//! Every fallible operation returns [`Result`]. The variants separate caller
//! mistakes (`InvalidArgument`, `DomainError`, `Unsupported`) from numerical
//! failures (`Numeric`) and structural conditions that callers may want to
//! branch on (`Disconnected`).

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: shape mismatches, empty collections, bad config fields.
    /// The message carries the offending path or argument name.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is well-formed but outside the mathematical domain of the
    /// operation (parameter outside the family's parameter space, boundary
    /// point where an interior one is required, and so on).
    #[error("domain error: {0}")]
    DomainError(String),

    /// The (family, operation) combination is deliberately not provided,
    /// e.g. a closed form that does not exist or a plug-in divergence that
    /// is refused.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical routine failed to converge to its tolerance.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A neighborhood graph split into several components where a connected
    /// one was required. Carries per-component sizes for diagnostics.
    #[error("neighborhood graph is disconnected: {component_sizes:?} (radius {radius})")]
    Disconnected {
        radius: f64,
        component_sizes: Vec<usize>,
    },

    /// A dissimilarity matrix destined for classical scaling contains a
    /// non-finite entry; carries one offending pair.
    #[error("non-finite dissimilarity between items {i} and {j}")]
    NonFiniteEntry { i: usize, j: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::DomainError(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
