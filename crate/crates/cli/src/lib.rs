//! Command-line front end for `qellip`: TOML run configurations, counts
//! CSV files and JSON reports.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 data
//! schema error, 4 numerical failure (the best iterate is still reported).

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use cli::{run, Cli, Command};
pub use error::{CliError, CliResult};
