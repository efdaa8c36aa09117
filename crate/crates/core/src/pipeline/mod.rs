//! Command implementations shared by the binary and the experiment tests.
//! Every command reads a [`RunConfig`] and writes its outputs, together with
//! `run_config.txt`, under the configured `out` directory.

mod commands;
mod config;

pub use commands::*;
pub use config::{RunConfig, KEYS};
