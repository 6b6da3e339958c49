//! Command-line plumbing: config parsing, experiment dispatch, artifacts and
//! replay manifests.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod plan;

pub use config::ConfigError;
pub use plan::{Experiment, Overrides};
