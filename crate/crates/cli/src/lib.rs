//! Configuration, experiments and CSV output for the `rfpk` command.

pub mod config;
pub mod error;
pub mod experiments;

pub use config::RunConfig;
pub use error::CliError;
