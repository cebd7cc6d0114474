//! Config-driven experiments on top of `schwarz-core`.

pub mod config;
pub mod experiment;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use experiment::{execute, CliError, Command, Experiment, Invocation, Report};
