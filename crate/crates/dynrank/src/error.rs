// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

/// Failure of a command, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config file or parameter values. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Unreadable or malformed input data. Exit code 3.
    #[error("data error: {0}")]
    Data(String),
    /// A numerical routine did not converge. Exit code 4.
    #[error("{0}")]
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Convergence(_) => 4,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

impl From<dynrank_core::Error> for CliError {
    fn from(e: dynrank_core::Error) -> Self {
        match e {
            dynrank_core::Error::Convergence { .. } => CliError::Convergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
