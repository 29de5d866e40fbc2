//! Experiment drivers for certified reduced-basis sensitivity analysis.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
