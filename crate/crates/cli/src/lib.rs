//! Experiment harness around `survgp-core`: CSV and JSON formats, repeated
//! runs with derived seeds, bootstrap evaluation, aggregation and rendering.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod model;

pub use error::{CliError, Result};
