use std::path::PathBuf;

use thiserror::Error;

/// Failures of the experiment runner, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),

    #[error("config: field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },

    #[error(transparent)]
    Simulation(#[from] spinforge::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } | CliError::Io { .. } => 1,
            CliError::Output { .. } | CliError::Simulation(_) => 3,
        }
    }
}
