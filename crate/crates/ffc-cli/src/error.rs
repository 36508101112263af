//! CLI-level error classification: every failure maps to a documented exit
//! code so scripts can branch on what went wrong.

use std::fmt;

use ffc_core::error::Error as CoreError;

/// Exit codes: 0 success, 2 usage/config, 3 data, 4 numerical.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m)) = self;
        write!(f, "{m}")
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidConfig(_) | CoreError::UnknownMethod(_) => {
                CliError::Usage(e.to_string())
            }
            CoreError::NonFinite(_)
            | CoreError::Divergence { .. }
            | CoreError::SymmetryViolation { .. } => CliError::Numerical(e.to_string()),
            CoreError::DimensionMismatch(_)
            | CoreError::IndexOutOfBounds { .. }
            | CoreError::Format { .. }
            | CoreError::Io(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("JSON: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
