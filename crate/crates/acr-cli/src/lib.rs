//! Library surface of the `acr` command-line tool, exposed so integration
//! tests can drive the commands in-process.

pub mod commands;
pub mod config;
pub mod dump;
pub mod error;

pub use config::{ExperimentConfig, Method};
pub use error::{CliError, CliResult};
