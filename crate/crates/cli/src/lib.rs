//! Driver for the `dwlab` command: configuration, reports and the acceptance suite.

use std::path::PathBuf;

use thiserror::Error;

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod export;
pub mod report;

pub mod exit {
    pub const PASS: u8 = 0;
    pub const VERIFICATION_FAILED: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const BLOW_UP: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}:{line}: {message}")]
    ConfigAt {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot read configuration {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(dwlab_core::Error),

    #[error("blow-up guard: {0}")]
    BlowUp(dwlab_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl From<dwlab_core::Error> for CliError {
    fn from(e: dwlab_core::Error) -> Self {
        match e {
            dwlab_core::Error::Coefficient { .. } => CliError::Config(e.to_string()),
            dwlab_core::Error::BlowUp { .. } => CliError::BlowUp(e),
            dwlab_core::Error::Step { ref source, .. } if matches!(**source, dwlab_core::Error::BlowUp { .. }) => {
                CliError::BlowUp(e)
            }
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigAt { .. } | CliError::Config(_) | CliError::ConfigRead { .. } => exit::CONFIG,
            CliError::Numerical(_) | CliError::Io { .. } => exit::NUMERICAL,
            CliError::BlowUp(_) => exit::BLOW_UP,
            CliError::Verification(_) => exit::VERIFICATION_FAILED,
        }
    }
}
