use std::fmt;

/// CLI failures split by exit code: configuration problems exit 2, data
/// problems exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<egodyn::Error> for CliError {
    fn from(err: egodyn::Error) -> Self {
        match err {
            egodyn::Error::InfeasibleConfig(_)
            | egodyn::Error::TooFewIntervals { .. }
            | egodyn::Error::EmptyIntervalLength => CliError::Config(err.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(format!("i/o failure: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
