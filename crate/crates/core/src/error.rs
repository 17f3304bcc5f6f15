use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The domain description itself is malformed (non-positive radius, etc.).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// The operation exists but not for this domain family.
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("solver did not converge after {iterations} iterations (max mass residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("solver step damping floor reached at iteration {iteration} (max mass residual {residual:e})")]
    DampingFloor { iteration: usize, residual: f64 },

    #[error("invariant violated at node {node}: {message}")]
    InvariantViolation { node: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
