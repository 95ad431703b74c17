use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure in stage `{stage}`: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: conespectra_core::Error,
    },

    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),

    #[error("threshold missed: {0}")]
    Threshold(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitCode::from(2),
            CliError::Numerical { .. } => ExitCode::from(3),
            CliError::Threshold(_) => ExitCode::from(1),
        }
    }
}

/// Tag core errors with the pipeline stage that raised them.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for conespectra_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { stage, source })
    }
}
