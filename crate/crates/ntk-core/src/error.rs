use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, CoreError>;

/// Errors surfaced by the numeric core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Ambient dimensions of two arguments disagree.
    DimensionMismatch { expected: usize, got: usize },
    /// An argument fell outside the mathematical domain of the operation.
    Domain(String),
    /// A Gram (or design) matrix was numerically rank-deficient; `rank` is the
    /// number of pivots accepted before the factorization stalled.
    RankDeficient { rank: usize, size: usize },
    /// An iteration diverged; carries the step index and the step size in use.
    Divergence { step: usize, step_size: f64 },
    /// An iterative method hit its iteration cap; carries the final residual.
    Convergence { residual: f64, max_iter: usize },
    /// The inputs are valid but the operation is not defined for them.
    Unsupported(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            CoreError::Domain(msg) => write!(f, "domain error: {msg}"),
            CoreError::RankDeficient { rank, size } => {
                write!(f, "rank-deficient matrix: estimated rank {rank} of {size}")
            }
            CoreError::Divergence { step, step_size } => {
                write!(f, "divergence at step {step} with step size {step_size}")
            }
            CoreError::Convergence { residual, max_iter } => {
                write!(
                    f,
                    "no convergence after {max_iter} iterations (residual {residual:e})"
                )
            }
            CoreError::Unsupported(msg) => write!(f, "unsupported: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}
