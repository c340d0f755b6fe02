//! CLI error classes mapped to exit codes: 1 usage/config, 2 data,
//! 3 numeric failure.

use factor_timing::{BacktestError, DataError, HarnessError, ModelError, TimingError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<TimingError> for CliError {
    fn from(e: TimingError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<BacktestError> for CliError {
    fn from(e: BacktestError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
