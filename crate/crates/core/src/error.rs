use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Zero-energy signals or spectra where a normalized quantity is requested.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The Gram matrix of a mode system is (numerically) singular, so the
    /// modes cannot be orthonormalized.
    #[error("degenerate modes: minimum normalized Gram eigenvalue {min_eigenvalue:.3e}")]
    DegenerateModes { min_eigenvalue: f64 },

    #[error("newton-schulz did not converge after {iterations} iterations (final off-diagonal {final_offdiag:.3e})")]
    NotConverged { iterations: usize, final_offdiag: f64 },

    #[error("solver diverged at sweep {iteration} (non-finite iterate)")]
    Diverged { iteration: usize },

    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),

    #[error("missing column `{0}`")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
}
