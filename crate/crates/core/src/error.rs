use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hermite order {order} exceeds the per-axis cap of {cap}")]
    HermiteOrderTooLarge { order: u32, cap: u32 },

    #[error("symmetric tridiagonal eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("Sobol dimension {0} exceeds the direction-number table (max 64)")]
    SobolDimension(usize),

    #[error("{0}")]
    Unsupported(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("could not find a starting point with positive density after {0} attempts")]
    SeedSearchFailed(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
