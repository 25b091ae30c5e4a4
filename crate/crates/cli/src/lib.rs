//! Experiment driver for `neuropt-core`.
//!
//! Loads JSON run configurations, executes single runs, sweeps and timing
//! studies, and writes CSV traces and JSON summaries.

pub mod commands;
pub mod experiment;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run aborted: {0}")]
    Abort(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Abort(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<neuropt_core::runtime::RunError> for CliError {
    fn from(e: neuropt_core::runtime::RunError) -> Self {
        CliError::Config(e.to_string())
    }
}
