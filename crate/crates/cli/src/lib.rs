//! Library side of the `g2t` command-line tool: configuration, artifact
//! persistence and the pipeline stages behind each subcommand.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;

pub use cli::{run, Cli, Command};
pub use config::{ConfigArgs, RunConfig};
pub use error::{CliError, Result};
