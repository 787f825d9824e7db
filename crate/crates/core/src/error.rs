use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid anisotropy: {0}")]
    InvalidAnisotropy(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("root bracketing for [x]_a failed after {iterations} steps at x = {point:?}")]
    BracketFailure { point: Vec<f64>, iterations: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("expression is not finite at cell center {point:?}")]
    NonFiniteSample { point: Vec<f64> },

    #[error("parallelepiped contains no cell center of the grid (center {center:?}, t = {t})")]
    EmptyIntersection { center: Vec<f64>, t: f64 },

    #[error("weight is not locally integrable: {0}")]
    NonIntegrable(String),

    #[error("weight must be strictly positive, found {value} at {point:?}")]
    NonPositiveWeight { point: Vec<f64>, value: f64 },

    #[error("grid center {index} is not covered by any family member")]
    UncoveredCenter { index: usize },

    #[error("{skipped} of {total} pairs skipped: family too coarse for the domain")]
    TooManySkipped { skipped: usize, total: usize },

    #[error("zero norm input: {0}")]
    ZeroNorm(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
