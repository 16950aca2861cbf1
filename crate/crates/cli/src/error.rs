use std::path::PathBuf;

use ghz_core::{AnalysisError, ProtocolError, TopologyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Route(#[from] TopologyError),
    #[error(transparent)]
    Simulation(#[from] ProtocolError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category printed as `error[<category>]`.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
            CliError::Route(_) => "route",
            CliError::Simulation(_) => "simulation",
            CliError::Analysis(_) => "analysis",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Data(_) => 5,
            CliError::Route(_) => 6,
            CliError::Simulation(_) => 7,
            CliError::Analysis(_) => 8,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
