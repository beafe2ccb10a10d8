//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::gfpt::TrapState;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures reported by the solvers, generators and parsers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-side precondition was not met (bad dimension, degenerate axis, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A point lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The oracle returned a negative value where a nonnegative co-domain is required.
    #[error("oracle contract violated: f({point:?}) = {value} is negative")]
    NegativeValue { point: Vec<f64>, value: f64 },

    /// The oracle returned NaN or an infinity.
    #[error("oracle returned a non-finite value {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },

    /// An internal postcondition failed. Either the implementation is wrong or
    /// the oracle is not L-smooth with the constant it advertises.
    #[error("internal invariant violated: {message} (implementation bug or an oracle that is not L-smooth for the stated L; trace has {} snapshots)", trace.len())]
    InvariantViolation { message: String, trace: Vec<TrapState> },

    /// An iteration budget ran out.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// An ITER successor table is malformed.
    #[error("invalid ITER instance: {0}")]
    InvalidIter(String),

    /// A text input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A sweep run missed its gradient-norm postcondition.
    #[error("sweep aborted at eps = {eps}: output gradient norm {grad_norm} exceeds eps")]
    SweepRow { eps: f64, grad_norm: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
