use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate stencil: horizon {delta} is smaller than the mesh width {h}")]
    DegenerateStencil { delta: f64, h: f64 },

    #[error("active-set solver did not converge at step {step} after {iterations} sweeps (residual {residual:.3e})")]
    Convergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("model {model} has zero variance over the pilot samples")]
    DegenerateStatistics { model: usize },

    #[error("budget {budget} is below the minimum budget {minimum} of the subset; use the below-minimum allocation")]
    BelowMinimumBudget { budget: f64, minimum: f64 },

    #[error("budget {budget} is below the guard {guard} required for subset {subset}")]
    InsufficientBudget {
        budget: f64,
        guard: f64,
        subset: String,
    },

    #[error("minimum budget is unbounded: first surrogate of {subset} is perfectly correlated with the high-fidelity model")]
    InfiniteBudget { subset: String },

    #[error("level {level} needs {needed} evaluations but only {available} were supplied")]
    InsufficientEvaluations {
        level: usize,
        needed: usize,
        available: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model {model} failed on sample {sample}: {source}")]
    Evaluation {
        model: usize,
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips evaluation context to reach the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Evaluation { source, .. } => source.root(),
            other => other,
        }
    }
}
