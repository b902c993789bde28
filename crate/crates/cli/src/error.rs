use std::fmt;

use cigraph::Error;

/// Process exit codes.
pub mod code {
    pub const USAGE: u8 = 2;
    pub const INPUT_FORMAT: u8 = 3;
    pub const NUMERIC: u8 = 4;
    pub const NOT_CONVERGED: u8 = 5;
    pub const IO: u8 = 6;
    pub const INCOMPATIBLE_WINDOW: u8 = 7;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(code::USAGE, message)
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self::new(code::INPUT_FORMAT, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(code::IO, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) => code::INPUT_FORMAT,
            Error::InvalidConfig(_) => code::USAGE,
            Error::EigenNoConvergence { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::Singular { .. }
            | Error::Degenerate(_) => code::NUMERIC,
        };
        Self::new(code, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
