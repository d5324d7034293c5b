//! Configuration, orchestration and file output for the `pcqc` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

use pcqc::profile::ProfileError;
use pcqc::readout::ReadoutError;
use pcqc::shots::ShotError;
use pcqc::teleport::TeleportError;

pub use config::{parse_config, parse_config_str, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::InsufficientData(_) => 4,
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::Io { .. }
            | ProfileError::Parse { .. }
            | ProfileError::NonMonotonic { .. }
            | ProfileError::MagnitudeOutOfRange { .. }
            | ProfileError::TooShort(_)
            | ProfileError::LengthMismatch(..)
            | ProfileError::InvalidParameter { .. } => CliError::Input(e.to_string()),
            ProfileError::Uncalibratable => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<TeleportError> for CliError {
    fn from(e: TeleportError) -> Self {
        match e {
            TeleportError::Profile(p) => p.into(),
            TeleportError::InvalidConfig(_) | TeleportError::DetectorInsideCavity { .. } => {
                CliError::Input(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<ReadoutError> for CliError {
    fn from(e: ReadoutError) -> Self {
        match e {
            ReadoutError::Profile(p) => p.into(),
            ReadoutError::TooFewMeasurements(_) => CliError::InsufficientData(e.to_string()),
            ReadoutError::InvalidZone(_) | ReadoutError::EmptyRange(_) => CliError::Input(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<ShotError> for CliError {
    fn from(e: ShotError) -> Self {
        match e {
            ShotError::Teleport(t) => t.into(),
            ShotError::Readout(r) => r.into(),
            ShotError::InsufficientData { .. } | ShotError::TooFewDetunings(_) | ShotError::NoAcceptance(_) => {
                CliError::InsufficientData(e.to_string())
            }
            ShotError::InvalidOptions(_) => CliError::Input(e.to_string()),
        }
    }
}

pub mod cli;
