use alloc::string::String;

/// Errors produced by the geometry, the solver and the problem generators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    Dimension {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A rank-deficient or zero input where a nondegenerate one is required.
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    /// The Cayley denominator (or a baseline Gram matrix) is singular for the
    /// requested step. Line searches treat this as a failed trial.
    #[error("step too large: retraction system is singular")]
    StepTooLarge,

    #[error("tangent vector is attached to a different base point")]
    BaseMismatch,

    #[error("point is infeasible: residual {residual:.3e} exceeds {tolerance:.3e}")]
    Infeasible { residual: f64, tolerance: f64 },

    /// `best_change` is the smallest `f(R_X(tZ)) − f(X)` among the trials.
    #[error("line search failed after {trials} trials (best objective change {best_change:e} at t = {best_t:e})")]
    LineSearchFailure {
        trials: usize,
        best_t: f64,
        best_change: f64,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("instance generation failed: {0}")]
    Generation(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
