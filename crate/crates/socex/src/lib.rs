//! Std companion to `socex-core`: TOML scenarios, edge lists, CSV and JSON
//! reports, parallel replication drivers and the `socex` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod edges;
mod error;
pub mod parallel;
pub mod table;

pub use error::{CliError, CliResult};
