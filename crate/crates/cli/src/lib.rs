//! Command implementations behind the `contractlab` binary.
//!
//! Exit codes: 0 when the checked property holds, 1 when it fails, 2 for
//! unreadable or invalid input, 3 when a computation exceeds a cap.

use std::fmt;

pub mod commands;
pub mod files;
pub mod reproduce;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FALSE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FALSE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<contractlab::Error> for CliError {
    fn from(e: contractlab::Error) -> Self {
        use contractlab::Error::*;
        let code = match &e {
            Capacity { .. } => EXIT_CAPACITY,
            InvalidAgent { .. }
            | InvalidProfile { .. }
            | InvalidContract(_)
            | InvalidDistribution(_)
            | InvalidInstance(_)
            | InvalidReward(_) => EXIT_PARSE,
            _ => EXIT_FALSE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// What a command prints and the exit code it ends with.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub text: String,
}

impl Outcome {
    pub fn new(passed: bool, text: String) -> Self {
        Outcome {
            code: if passed { EXIT_PASS } else { EXIT_FALSE },
            text,
        }
    }
}
