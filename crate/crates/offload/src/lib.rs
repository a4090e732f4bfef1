//! File formats, experiment runner and command line for
//! [`hybrid_offload_core`].
//!
//! * [`config`]: scenario config JSON with its unit conventions.
//! * [`instance`]: single-period instance and assignment JSON.
//! * [`trace`]: membership and link trace CSVs.
//! * [`experiment`]: sweep specs, parallel execution, summary and manifest.

pub mod config;
pub mod experiment;
pub mod instance;
pub mod stats;
pub mod trace;

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OffloadError {
    /// Bad input: malformed or inconsistent files, out-of-range values.
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Run(String),
}

impl OffloadError {
    /// Process exit code: 1 for invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            OffloadError::Validation(_) => 1,
            OffloadError::Io { .. } | OffloadError::Run(_) => 2,
        }
    }
}

/// Reads an input file; a missing or unreadable input is a validation error.
pub fn read_input(path: &Path) -> Result<String, OffloadError> {
    std::fs::read_to_string(path).map_err(|e| OffloadError::Validation(format!("{}: {e}", path.display())))
}
