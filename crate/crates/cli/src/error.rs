use thiserror::Error;

use rfpk_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("solver: {0}")]
    Solver(CoreError),

    #[error("kernel calibration: {0}")]
    Calibration(CoreError),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("output: {0}")]
    Io(String),
}

impl CliError {
    /// 2 config, 3 solver, 4 calibration, 5 fit, 1 output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Calibration(_) => 4,
            CliError::Fit(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Calibration(_) => CliError::Calibration(e),
            CoreError::WindowTooShort { .. } => CliError::Fit(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
