//! Command-line driver for the `ringsense` toolkit: layered configuration,
//! run manifests, single-point pipelines and resumable sweeps.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod sweep;

pub use commands::{run, Cli};
pub use config::{Config, Preset};
pub use pipeline::RunError;
