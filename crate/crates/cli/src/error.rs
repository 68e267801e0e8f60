use tcm_core::TcmError;
use thiserror::Error;

/// Outcome classes of a command; each maps to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("blow-up: {0}")]
    BlowUp(TcmError),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("unstable inequality checks: {0}")]
    Unstable(String),

    #[error("{0}")]
    NonPositive(TcmError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::BlowUp(_) => 3,
            CliError::Io(_) => 4,
            CliError::Unstable(_) => 5,
            CliError::NonPositive(_) => 6,
        }
    }
}

impl From<TcmError> for CliError {
    fn from(e: TcmError) -> Self {
        match e {
            TcmError::BlowUp { .. } => CliError::BlowUp(e),
            TcmError::NonPositiveValue { .. } => CliError::NonPositive(e),
            TcmError::Sink(msg) => CliError::Io(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
