use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("level code {code} out of range for categorical variable {variable} with {levels} levels")]
    LevelOutOfRange {
        variable: usize,
        code: usize,
        levels: usize,
    },

    #[error("non-finite value at row {row}, continuous column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("precision beta[{node}][{node}] = {value} must be positive")]
    NonPositivePrecision { node: usize, value: f64 },

    #[error("continuous precision matrix B is not positive definite")]
    NotPositiveDefinite,

    #[error("{states} discrete states exceed the enumeration cap of {cap}; use Gibbs sampling instead")]
    EnumerationCap { states: usize, cap: usize },

    #[error("discrete state space is too large to count")]
    StateSpaceOverflow,

    #[error("solver failure: {0}")]
    Solver(#[from] SolverError),

    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration")]
    InvalidConfig,

    #[error("initial point is outside the objective's domain")]
    InfeasibleStart,

    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },

    #[error("objective domain error at iteration {iteration}")]
    Domain { iteration: usize },

    #[error("line search failed at iteration {iteration} (step shrank below {min_step:e})")]
    LineSearch { iteration: usize, min_step: f64 },

    #[error("dense curvature approximation needs dimension <= {limit}, got {dim}")]
    DimensionTooLarge { dim: usize, limit: usize },
}
