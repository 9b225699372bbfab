use thiserror::Error;

/// Errors produced by grid construction, operators, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("negative gamma entry at flat index {0}")]
    NegativeGamma(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
