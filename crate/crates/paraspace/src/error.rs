use thiserror::Error;

/// Errors surfaced by construction and analysis routines.
///
/// Numerical checks that *measure* something (norms, residuals) do not error
/// on large values; they report them. Errors are reserved for ill-posed
/// requests: mismatched shapes, scales outside the resolved range, exponents
/// for which the requested object is not defined.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("scale out of range: {0}")]
    ScaleOutOfRange(String),

    #[error("invalid exponent: {0}")]
    InvalidGamma(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("unknown sector: {0}")]
    UnknownSector(String),

    #[error("malformed partition: {0}")]
    MalformedPartition(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
