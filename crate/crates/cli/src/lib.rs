//! Experiment runner for `spinforge`: declarative TOML configs, named
//! experiments and their CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use experiments::{run_experiment, Check, Report};
