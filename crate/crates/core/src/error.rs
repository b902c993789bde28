use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input data violates a structural requirement (shape, finiteness, length).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of range or inconsistent with the data.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The Jacobi sweeps did not drive the off-diagonal mass below tolerance.
    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    EigenNoConvergence { sweeps: usize, residual: f64 },

    /// Cholesky factorization met a non-positive pivot.
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },

    /// A general (non-Hermitian) matrix could not be inverted.
    #[error("matrix is singular (pivot column {index})")]
    Singular { index: usize },

    /// Tuning or generation could not find a usable configuration.
    #[error("degenerate problem: {0}")]
    Degenerate(String),
}
