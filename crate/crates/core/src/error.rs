//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Everything that can go wrong while building, stepping or verifying a run.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations (relative change {residual:e})")]
    EigenFailure { iterations: usize, residual: f64 },

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("{field} lost positivity at t = {time}: min {min:e} (threshold {threshold:e})")]
    Positivity {
        field: &'static str,
        time: f64,
        min: f64,
        threshold: f64,
    },

    #[error("velocity divergence {divergence:e} exceeds {limit:e} at t = {time}")]
    Divergence {
        time: f64,
        divergence: f64,
        limit: f64,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
