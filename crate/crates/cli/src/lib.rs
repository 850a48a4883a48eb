//! Configuration and dispatch for the `surfdiff` command-line tool.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigError, Mode, RunConfig};
pub use run::{run, Outcome, RunError};
