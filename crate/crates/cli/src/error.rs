use std::path::{Path, PathBuf};

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] stripeforge_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("optimization aborted: {0}")]
    Aborted(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if e.is_solver_failure() => "solver",
            CliError::Aborted(_) => "solver",
            CliError::Io { .. } => "io",
            _ => "validation",
        }
    }

    /// 2 for solver failures, 3 for invalid input or unusable paths.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_solver_failure() => 2,
            CliError::Aborted(_) => 2,
            _ => 3,
        }
    }
}
