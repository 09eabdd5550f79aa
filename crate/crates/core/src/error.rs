use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range. `field` names
    /// the offending entry (e.g. `grid.N`).
    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    /// Two fields (or a field and an operator) live on incompatible grids.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar argument is out of range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("solver failed after {iterations} iterations, residual {last_residual:.3e}")]
    SolverFailure {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    /// A constructive search (cut-off radius selection, ...) exhausted its budget.
    #[error("construction failed: {0}")]
    Construction(String),

    /// The requested computation is refused because the supplied data cannot
    /// support a meaningful answer.
    #[error("refused: {0}")]
    Refusal(String),

    /// Internal invariant violation; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
