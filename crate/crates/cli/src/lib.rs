//! Config-driven experiment runner: loads a TOML experiment description,
//! fans the grid of (algorithm, hyperparameter, seed) runs out over a worker
//! pool and writes long-format CSV plus a run manifest.

pub mod config;
pub mod experiments;

use std::path::PathBuf;

pub use config::{EnvConfig, ExperimentConfig, ExperimentKind};
pub use experiments::{run, write_outputs, RunOptions, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] gtt_core::Error),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
