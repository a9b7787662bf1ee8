//! Library side of the `combwalk` binary: configuration, execution and
//! artifact writing.

pub mod config;
pub mod run;

pub use config::{Command, GraphConfig, ProfileConfig, RunConfig};
pub use run::{execute, Artifacts};

use std::fmt;

/// Failure of a run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or flags (exit code 2).
    Validation(String),
    /// The run itself failed (exit code 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<combwalk::Error> for CliError {
    fn from(e: combwalk::Error) -> Self {
        use combwalk::Error as E;
        match e {
            E::BadParameter(_)
            | E::MetricUnsupported
            | E::EmptyBase
            | E::OverlappingBoundary { .. }
            | E::BadRange { .. }
            | E::BadHeight { .. }
            | E::HorizonExceedsTruncation { .. }
            | E::BallExceedsTruncation { .. }
            | E::Parse { .. }
            | E::InvalidGraph(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
