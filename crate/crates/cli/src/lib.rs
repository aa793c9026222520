//! Scenario files, run records and the command implementations behind the
//! `sbdc` binary.

pub mod benchmark;
pub mod commands;
pub mod error;
pub mod output;
pub mod plot;
pub mod record;
pub mod scenario;

pub use error::CliError;
