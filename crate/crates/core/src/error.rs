use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("design system for pair ({i}, {j}) is infeasible")]
    Infeasible { i: usize, j: usize },

    #[error("simplex made no progress on the design system for pair ({i}, {j})")]
    SolverStalled { i: usize, j: usize },

    #[error("zero gap for arm {arm} with epsilon = 0")]
    ZeroGap { arm: usize },

    #[error("no crossing found below 2^63")]
    Overflow,

    #[error("empty reward table for arm {0}")]
    EmptyRewardTable(usize),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("trace lacks index data at round {0}")]
    MissingTraceData(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
