use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by solvers, verifiers and the run driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("solver residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },

    /// A run must stop; the message names the cause.
    #[error("halted: {0}")]
    Halt(String),

    #[error("fit rejected: {0}")]
    Fit(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}

/// Returns the index of the first non-finite entry, if any.
pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}
