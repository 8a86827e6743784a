use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qrandlab::Error),

    #[error("{0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(_) | CliError::Usage(_) => Status::ValidationFailed.into(),
            CliError::Io(_) => ExitCode::FAILURE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    ValidationFailed,
    SearchExhausted,
    AcceptanceFailed,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(match s {
            Status::Pass => 0,
            Status::ValidationFailed => 2,
            Status::SearchExhausted => 3,
            Status::AcceptanceFailed => 4,
        })
    }
}
