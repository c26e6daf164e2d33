//! Command-line front end for `treespec`: configuration, the `solve`,
//! `scan`, `bands` and `oracle` commands, and their CSV, JSON and SVG output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_bands, cmd_oracle, cmd_scan, cmd_solve};
pub use config::{Preset, RunConfig};
pub use error::{CliError, CliResult};
