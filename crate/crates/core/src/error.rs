use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("expected a non-empty square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix is not strongly positive: smallest eigenvalue {min_eig} ≤ floor {floor}")]
    NotStronglyPositive { min_eig: f64, floor: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Crate-wide error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("system mismatch: expected {expected}, got {actual}")]
    SystemMismatch { expected: String, actual: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("input outside the subalgebra span (residual {residual:.3e})")]
    OutsideSubalgebra { residual: f64 },
    #[error("invalid subalgebra: {0}")]
    InvalidSubalgebra(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
