//! Experiment runner and verification driver behind the `sgoal` binary.

pub mod commands;
pub mod config;

use thiserror::Error;

/// Errors surfaced by a subcommand, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, invalid config, unwritable output or an instance too large to verify.
    #[error("{0}")]
    Usage(String),
    /// A run failed after it started.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<sgoal::SgoalError> for CliError {
    fn from(e: sgoal::SgoalError) -> Self {
        CliError::Usage(e.to_string())
    }
}
