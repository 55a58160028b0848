//! Exit-code contract: 0 ok, 1 config error, 2 numerical failure, 3 invariant violation.

use std::fmt;

use magflow::MagflowError;

pub const CONFIG: u8 = 1;
pub const NUMERICAL: u8 = 2;
pub const INVARIANT: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn config_error(message: impl Into<String>) -> CliError {
    CliError {
        code: CONFIG,
        message: message.into(),
    }
}

pub fn invariant_error(message: impl Into<String>) -> CliError {
    CliError {
        code: INVARIANT,
        message: message.into(),
    }
}

/// Numerical failures map to exit 2, anything else raised while running a
/// configured system is blamed on the configuration.
pub fn from_run(context: &str, e: MagflowError) -> CliError {
    CliError {
        code: if e.is_numerical() { NUMERICAL } else { CONFIG },
        message: format!("{context}: {e}"),
    }
}

pub fn io_error(e: impl fmt::Display) -> CliError {
    config_error(format!("output: {e}"))
}
