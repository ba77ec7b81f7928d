use thiserror::Error;

/// Errors raised by the solvers and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("paired basis for L={levels}, M={pairs} has dimension binomial({levels},{pairs}) = {dim}, above the budget of {budget}")]
    Capacity {
        levels: usize,
        pairs: usize,
        dim: u128,
        budget: usize,
    },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular Jacobian at lambda={lambda}; retry with a smaller continuation step")]
    SingularJacobian { lambda: f64 },

    #[error("continuation failed after lambda={last_good}: could not reach lambda={target} with step >= {min_step:e}")]
    ContinuationFailed {
        last_good: f64,
        target: f64,
        min_step: f64,
    },

    #[error("no bracket for the gap equation: {0}")]
    NoBracket(String),

    #[error("quadrature did not reach tolerance (error estimate {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("threshold search failed: {0}")]
    Threshold(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for bad input, 1 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Domain(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
