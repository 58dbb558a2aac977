use thiserror::Error;

use crate::instance::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    /// A matrix that must be positive definite (negative definite when
    /// `negative` is set) is not. `margin` is the offending extreme eigenvalue.
    #[error("{matrix} is not {}: extreme eigenvalue {margin:e}", if *negative { "negative definite" } else { "positive definite" })]
    NotDefinite { matrix: &'static str, margin: f64, negative: bool },

    #[error("failed to parse instance document: {message}")]
    Parse { field: Option<String>, message: String },

    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),

    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: &'static str, message: String },

    #[error("K selection failed after {doublings} doublings (last K = {last_k:e}): {diagnostic}")]
    KSelection { doublings: u32, last_k: f64, diagnostic: String },

    #[error("precondition of {check} violated: {message}")]
    Precondition { check: &'static str, message: String },

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn not_pd(matrix: &'static str, margin: f64) -> Self {
        Error::NotDefinite { matrix, margin, negative: false }
    }

    pub(crate) fn not_nd(matrix: &'static str, margin: f64) -> Self {
        Error::NotDefinite { matrix, margin, negative: true }
    }

    /// True for errors caused by a numerical precondition (definiteness or
    /// K selection) rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotDefinite { .. } | Error::KSelection { .. } | Error::Precondition { .. })
    }
}
