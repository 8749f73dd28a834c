use thiserror::Error;

/// Errors produced by the handover library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid static configuration or mismatched dimensions.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value violates a mathematical precondition (e.g. a non-positive weight).
    #[error("domain error: {0}")]
    Domain(String),

    /// A decision is outside the feasible set.
    #[error("feasibility error: {0}")]
    Feasibility(String),

    /// An iterative solver stopped before reaching its tolerance.
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    /// An instance exceeds the guard rails of an exact solver.
    #[error("instance too large: {0}")]
    Size(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("horizon mismatch: {0} vs {1}")]
    Horizon(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
