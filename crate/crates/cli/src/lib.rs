//! Experiment harness: configuration, presets, runs, sweeps, the verification
//! report and SVG plots.

pub mod commands;
pub mod config;
mod error;
pub mod plot;
pub mod problem;
pub mod trace_io;
pub mod verify;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{CliError, Result};
