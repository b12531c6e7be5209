use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("pole on the integration contour (Im z = {0})")]
    PoleOnContour(f64),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("wrong fiducial variant: {0}")]
    WrongVariant(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("empty interior: {0}")]
    EmptyInterior(String),

    #[error("excessive resampling loss {lost:.3e} (limit {limit:.1e})")]
    MassLoss { lost: f64, limit: f64 },

    #[error("non-convergent limit: {0}")]
    NonConvergent(String),

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
