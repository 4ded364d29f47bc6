//! Experiment orchestration for rank/laziness studies: JSON configs, a
//! parallel sweep runner with per-cell seeding, CSV persistence and
//! hand-written SVG figures.

pub mod app;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod stats;
pub mod svg;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{CliError, ConfigError};
pub use runner::run_experiment;
