//! Library behind the `pcs` binary: run configurations, subcommands and the
//! documentation scaffold.

pub mod commands;
pub mod config;
pub mod docgen;
pub mod error;

pub use error::{CliError, CliResult};
