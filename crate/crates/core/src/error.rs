use thiserror::Error;

/// Errors raised by the laboratory's operators and constructors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument `{arg}`: {reason}")]
    InvalidArgument { arg: &'static str, reason: String },

    #[error("polynomial is not harmonic (residual Laplacian: {residual})")]
    NotHarmonic { residual: String },

    #[error("multi-index {entries:?} has repeated axes; only indices with distinct entries give harmonic monomials")]
    RepeatedIndex { entries: Vec<usize> },

    #[error("parse error at `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("truncation radius {t} is below the quadrature floor {floor} (2h)")]
    TruncationTooSmall { t: f64, floor: f64 },

    #[error("test function support leaks outside radius {radius}: energy fraction {fraction:.3e}")]
    SupportViolation { radius: f64, fraction: f64 },

    #[error("degenerate denominator: {0}")]
    Degenerate(String),

    #[error("radial profile ill-conditioned: {0}")]
    IllConditioned(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
