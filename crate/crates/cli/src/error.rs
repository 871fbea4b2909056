use std::process::ExitCode;

use thiserror::Error;

/// Every failure the binary reports. The first stderr line is always
/// `error: <code>: <message>`.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(String),
    #[error("cap-exceeded: {0}")]
    CapExceeded(String),
    #[error("solver-failure: {0}")]
    Solver(String),
    #[error("verify-failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Usage(_) | CliError::Parse(_) | CliError::Validation(_) | CliError::Io(_) => {
                2
            }
            CliError::CapExceeded(_) => 3,
            CliError::Solver(_) => 4,
        })
    }
}

impl From<atv_core::Error> for CliError {
    fn from(e: atv_core::Error) -> Self {
        use atv_core::Error as E;
        match e {
            E::CapExceeded { .. } => CliError::CapExceeded(e.to_string()),
            E::SolverFailure(_) | E::Infeasible => CliError::Solver(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
