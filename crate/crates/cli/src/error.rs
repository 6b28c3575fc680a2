use std::path::{Path, PathBuf};

use sle_core::SleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] SleError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    /// 2 usage, 3 numerical, 4 resource budget, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Core(SleError::Parameter(_)) => 2,
            Self::Core(SleError::Resource(_)) => 4,
            Self::Core(_) => 3,
            Self::Io { .. } => 1,
        }
    }
}
