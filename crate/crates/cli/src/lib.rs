//! Library side of the `qm` command: configuration, the axiom verification
//! suite and the experiment commands. `main.rs` only parses arguments and
//! maps [`CliError`] to exit codes.

pub mod commands;
pub mod config;
pub mod verify;

use qm_core::QmError;

/// Exit code contract: 0 success, 1 a check failed, 2 usage or config error.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] QmError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) | CliError::Core(QmError::Numerical(_)) => EXIT_CHECK_FAILED,
            CliError::Config(_) | CliError::Core(_) | CliError::Io(_) => EXIT_CONFIG,
        }
    }
}
