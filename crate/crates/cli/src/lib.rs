//! Configuration, persistence and experiment commands behind the `rnsa`
//! binary. The commands are plain functions so tests can drive them without
//! spawning a process.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod output;
pub mod setup;
pub mod verify;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointError, CheckpointParams};
pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use setup::{derive_seed, Setup};

pub const TOOL_VERSION: &str = concat!("rnsa ", env!("CARGO_PKG_VERSION"));

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const BLOW_UP: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Core(rnsa_core::Error),
    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl From<rnsa_core::Error> for CliError {
    fn from(e: rnsa_core::Error) -> Self {
        match e {
            rnsa_core::Error::BlowUp { t, reason } => CliError::BlowUp { t, reason },
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => exit::CHECK_FAILED,
            CliError::BlowUp { .. } => exit::BLOW_UP,
            CliError::Usage(_) | CliError::Core(_) | CliError::Checkpoint(_) | CliError::Io(_) => exit::USAGE,
        }
    }
}
