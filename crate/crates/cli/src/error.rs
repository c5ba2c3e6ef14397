use std::path::PathBuf;

use crate::config::ValidationError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration ({} problem(s))", .0.len())]
    Invalid(Vec<ValidationError>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Scenario(String),
    #[error(transparent)]
    Core(#[from] ontic_core::Error),
}
