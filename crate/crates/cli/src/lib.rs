//! Config-driven experiment runner for the `lazywalk` library.
//!
//! Every command reads one TOML config (see [`config`]), writes CSV files
//! into an output directory and finishes with a `manifest.json` that echoes
//! the config and lists each file with its SHA-256 checksum.

use std::path::{Path, PathBuf};

use lazywalk::WalkError;
use thiserror::Error;

pub mod config;
pub mod output;
pub mod run;

pub use config::{ExperimentConfig, LoadedConfig, Metric};
pub use output::Manifest;
pub use run::{run_classical, run_metrics, run_simulate, run_spectral, run_sweep, RunOptions};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] WalkError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 for config errors, 3 for numerical failures,
    /// 1 for I/O errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    LoadedConfig::parse(&path.display().to_string(), &text)
}
