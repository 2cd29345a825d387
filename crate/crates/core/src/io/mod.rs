//! Configuration, orchestration and file output.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{ConfigError, RunConfig, Stage};
pub use pipeline::{run_pipeline, RunManifest, StageStatus};
