use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input (exit code 2 at the CLI).
    #[error("invalid input: {0}")]
    Input(String),

    /// A computation would exceed a configured size limit.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (stationarity {stationarity:.3e}, feasibility {feasibility:.3e})")]
    NonConvergence {
        iterations: usize,
        stationarity: f64,
        feasibility: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by the caller's input rather than by the solver.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Io { .. } | Error::Json(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
