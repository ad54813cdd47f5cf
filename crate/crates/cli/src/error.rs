//! Error-to-exit-code mapping. Contract: 0 success, 2 usage or
//! configuration error, 1 runtime failure.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file, or parameter values: exit 2.
    Usage(String),
    /// Failure while executing a valid configuration: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl From<moldiff_core::Error> for CliError {
    fn from(e: moldiff_core::Error) -> Self {
        match e {
            // Parameter problems trace back to configuration.
            moldiff_core::Error::InvalidParameter(_) | moldiff_core::Error::DegenerateInput(_) => {
                CliError::Usage(e.to_string())
            }
            moldiff_core::Error::Sync(_) | moldiff_core::Error::Framing(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
