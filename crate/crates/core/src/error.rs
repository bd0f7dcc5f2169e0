use thiserror::Error;

/// Errors raised by the numerical routines and the campaign runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("matrix is not symmetric (residual {residual:.3e})")]
    NotSymmetric { residual: f64 },
    #[error("matrix is not antisymmetric (residual {residual:.3e})")]
    NotAntisymmetric { residual: f64 },
    #[error("{0} did not converge")]
    ConvergenceFailure(&'static str),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("chart is near singular (condition number {condition:.3e})")]
    NearSingular { condition: f64 },
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("real dimension {real_dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { real_dim: usize, max: usize },
    #[error("test function `{0}` has no damping on the non-compact space")]
    NonIntegrable(String),
    #[error("operation not available for {0}")]
    UnsupportedFamily(String),
    #[error("invalid space: {0}")]
    InvalidSpec(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
