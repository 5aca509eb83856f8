use std::path::Path;

use mimo_decay::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Checks ran to completion and at least one failed.
    #[error("{0}")]
    Failed(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { required, budget } => {
                CliError::Budget(format!("requires {required} evaluations, budget is {budget}"))
            }
            Error::Schema { .. } | Error::Serialization(_) => CliError::Schema(e.to_string()),
            Error::InvalidParameter(_) | Error::CodeTooShort { .. } => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
