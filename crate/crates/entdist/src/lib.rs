//! Configuration-driven runner for entanglement-distribution scenarios:
//! scenario files and presets, output schemas, run manifests and the four
//! experiment pipelines behind the `entdist` command.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod runner;
pub mod svg;

pub use config::Scenario;
pub use error::{ConfigError, RunError};
pub use runner::{execute, run, Command, RunOptions};
