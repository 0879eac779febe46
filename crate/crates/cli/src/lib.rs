//! Configuration parsing and experiment pipelines behind the `bwalk` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigErrors, ExperimentConfig, Kind, Parsed};
pub use run::{run_experiment, Check, Diagnostics, Outcome, RunError, RunOptions};
