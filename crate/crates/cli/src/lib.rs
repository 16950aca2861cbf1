//! Configuration, file formats and subcommands of the `ghz` tool.

pub mod calibration;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

pub use error::{CliError, Result};
