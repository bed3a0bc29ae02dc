use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    Mesh(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid problem data: {0}")]
    Problem(String),

    #[error("sparse index ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular pivot at row {row}")]
    Singular { row: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Picard iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    PicardNonConvergence { iterations: usize, increment: f64 },

    #[error("isotherm evaluated at its pole (c = {c})")]
    IsothermDomain { c: f64 },

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("run with dt = {dt} failed: {source}")]
    Run {
        dt: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Mesh(_) | Error::Config(_) | Error::Problem(_) => true,
            Error::Step { source, .. } | Error::Run { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
