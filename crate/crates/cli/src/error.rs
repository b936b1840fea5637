use std::path::PathBuf;

use randrec::{EstimateError, ModelError, SimError, SpectralError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("config {path} at {at}: {message}")]
    Config {
        path: PathBuf,
        at: String,
        message: String,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("model {path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    /// 1 for invalid input, 2 when the model is outside the supported
    /// regime, 3 when a simulation fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spectral(e) => spectral_code(e),
            CliError::Sim(e) => match e {
                SimError::Diverged(_) | SimError::BlockOverflow { .. } => 3,
                SimError::Spectral(e) => spectral_code(e),
                SimError::NotCChain(_) | SimError::InvalidArgument(_) | SimError::Model(_) => 1,
            },
            CliError::Io { .. }
            | CliError::Usage(_)
            | CliError::Config { .. }
            | CliError::Csv { .. }
            | CliError::Model { .. }
            | CliError::Estimate(_)
            | CliError::Output(_) => 1,
        }
    }
}

fn spectral_code(e: &SpectralError) -> i32 {
    match e {
        SpectralError::NotSquare(..)
        | SpectralError::BadTolerance(_)
        | SpectralError::NegativeEntry
        | SpectralError::BadArgument(_)
        | SpectralError::Model(_) => 1,
        _ => 2,
    }
}
