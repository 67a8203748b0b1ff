//! Library side of the `phasespace` command: configs, snapshots, rendering
//! and run orchestration.

pub mod config;
pub mod render;
pub mod run;
pub mod snapshot;

use std::io;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, RunConfig};

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "PHASESPACE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] phasespace::Error),
    #[error(transparent)]
    Snapshot(#[from] snapshot::SnapshotError),
    #[error(transparent)]
    Render(#[from] render::RenderError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> CliError {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status: 2 for configuration and input problems, 3 for
    /// numeric failures, 4 for I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(phasespace::Error::Numeric(_)) => 3,
            CliError::Core(phasespace::Error::Sink { .. }) => 4,
            CliError::Core(_) => 2,
            CliError::Snapshot(snapshot::SnapshotError::Io { .. }) => 4,
            CliError::Snapshot(_) => 2,
            CliError::Render(render::RenderError::Field(_)) => 2,
            CliError::Render(_) => 4,
            CliError::Io { .. } => 4,
        }
    }
}
