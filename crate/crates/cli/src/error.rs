use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Schema violation or invalid value, located by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("cannot write output directory {}: {source}", path.display())]
    OutputDir { path: PathBuf, source: std::io::Error },

    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("solver failure: {0}")]
    Solver(ptrmt::Error),

    #[error("{failed} of {total} cells failed; remaining outputs written")]
    Partial { failed: usize, total: usize },

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl CliError {
    /// Process exit status: 2 configuration, 3 partial cell failure,
    /// 4 solver failure, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::OutputDir { .. } => 2,
            CliError::Partial { .. } => 3,
            CliError::Solver(_) => 4,
            CliError::Io { .. } | CliError::ReplayMismatch(_) => 1,
        }
    }
}

impl From<ptrmt::Error> for CliError {
    fn from(e: ptrmt::Error) -> Self {
        match e {
            ptrmt::Error::Domain(_) | ptrmt::Error::Unconstructible(_) => {
                CliError::Config(ConfigError::new("", e.to_string()))
            }
            other => CliError::Solver(other),
        }
    }
}
