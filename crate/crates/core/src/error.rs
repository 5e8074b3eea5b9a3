use thiserror::Error;

/// Errors raised by map construction, cubature and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point {point:?} is outside the domain: {reason}")]
    OutsideDomain { point: Vec<f64>, reason: String },

    #[error("matrix is singular")]
    Singular,

    #[error("deterministic cubature is not available in dimension {dim}; use mc_integrate")]
    UnsupportedDimension { dim: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("report parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
