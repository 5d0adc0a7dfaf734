use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exterior datum `{label}` is not finite at x = {x}")]
    Evaluation { label: String, x: f64 },

    #[error("node {index} is not interior (interior nodes are {first}..={last})")]
    NotInterior {
        index: usize,
        first: usize,
        last: usize,
    },

    #[error("tail quadrature missed tolerance {tol:e} (estimated error {estimate:e})")]
    TailTolerance { tol: f64, estimate: f64 },

    #[error("linear system is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("no convergence after {iterations} iterations (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("power-constant calibration failed: {0}")]
    Calibration(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
