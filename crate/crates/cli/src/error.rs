use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown preset or problem `{0}` (see `lraa presets`)")]
    UnknownTarget(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("ES weights file {0} not found")]
    MissingWeights(PathBuf),

    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),

    #[error("{0}: {1}")]
    Csv(PathBuf, #[source] csv::Error),

    #[error(transparent)]
    Solver(#[from] lraa_core::Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(path.to_path_buf(), e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
