//! Experiment runner around `chemnmf`: seeded parameter sweeps, clustering
//! tables, per-run loss traces and barrier reports.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, Method, NoiseLevel};
pub use error::{CliError, CliResult, ErrorKind};
pub use runner::{run_experiment, Cell, Experiment, ResultRow};
