use std::path::PathBuf;

use thiserror::Error;

use crate::scenario::ValidationError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Core(#[from] sbdc_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl std::error::Error for ValidationError {}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
