// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end for `dynrank-core`: file formats, run
//! configuration, subcommands and parallel simulation replicates.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod replicate;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
