use std::process::ExitCode;

use fsdr_core::SdrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error in {stage}: {message}")]
    Data { stage: &'static str, message: String },

    #[error("numerical failure in {stage}: {message}")]
    Numerical { stage: &'static str, message: String },

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(stage: &'static str, msg: impl Into<String>) -> Self {
        CliError::Data {
            stage,
            message: msg.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Data { .. } => 3,
            CliError::Numerical { .. } | CliError::Output { .. } => 4,
        })
    }

    /// Classify a library error, naming `fallback` as the stage when the
    /// library did not record one.
    pub fn from_core(err: SdrError, fallback: &'static str) -> Self {
        let stage = err.stage_name().unwrap_or(fallback);
        let message = err.root().to_string();
        if err.is_config_error() {
            CliError::Config(format!("{stage}: {message}"))
        } else if err.is_data_error() {
            CliError::Data { stage, message }
        } else {
            CliError::Numerical { stage, message }
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub trait CoreExt<T> {
    fn at(self, stage: &'static str) -> CliResult<T>;
}

impl<T> CoreExt<T> for fsdr_core::Result<T> {
    fn at(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(e, stage))
    }
}
