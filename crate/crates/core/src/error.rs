use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("operator has a zero diagonal entry at index {index}")]
    ZeroDiagonal { index: usize },
    #[error("operator provides no diagonal")]
    MissingDiagonal,
    #[error("operator is not positive definite (r.Ar = {value})")]
    NotPositiveDefinite { value: f64 },
    #[error("right-hand side is zero; relative residual undefined")]
    ZeroRhs,
    #[error("matrix is singular (pivot column {column})")]
    Singular { column: usize },
    #[error("unrolled differentiation needs stored iterates")]
    MissingIterates,
    #[error("stored iterates ({iterates}) do not match iterations used ({iterations})")]
    TapeMismatch { iterates: usize, iterations: usize },
    #[error("unrolled differentiation is not available for {0}")]
    UnsupportedMode(&'static str),
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
    #[error("reference has zero norm")]
    ZeroReference,
    #[error("division by zero in refinement controller: {0}")]
    ZeroMetric(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
