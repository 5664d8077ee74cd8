//! Batch front end for the `petviashvili` solver. A run is described by a
//! [`config::RunConfig`]; [`commands`] turns it into solution files, CSV
//! diagnostics and summaries.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::CliError;
