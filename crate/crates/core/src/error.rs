use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum HjdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid level {level} (hierarchy has {levels} levels)")]
    InvalidLevel { level: usize, levels: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("the saddle Hamiltonian has no convex Legendre dual")]
    UnsupportedLagrangian,

    #[error("no grid vertex lies inside the terminal ball")]
    EmptyBall,

    #[error("coordinate block is empty")]
    EmptyBlock,

    #[error("{scheme} sweep diverged at time index {step} (max CFL number {cfl:.3})")]
    Diverged {
        step: usize,
        scheme: &'static str,
        cfl: f64,
    },

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed field file {path}: {msg}")]
    FieldFormat { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, HjdError>;

impl HjdError {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        HjdError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HjdError::Io {
            path: path.into(),
            source,
        }
    }
}
