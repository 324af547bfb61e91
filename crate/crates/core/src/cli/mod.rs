//! Configuration, reporting and the command implementations behind the
//! `gshift` binary.

pub mod commands;
pub mod config;
pub mod float;
pub mod report;

pub use commands::{cmd_bounds, cmd_power, cmd_support, cmd_verify, run, to_csv, Command};
pub use config::{RunConfig, Suite};
pub use report::{Provenance, Record, ReportEnvelope};
