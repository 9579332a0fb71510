//! Batch experiment runner for the `hessdamp` solvers: config parsing, CSV
//! traces, certificate verdicts and oscillation counts.

pub mod config;
pub mod error;
pub mod runner;

pub use config::{parse_config, ExperimentConfig, Method, MethodParams};
pub use error::{ConfigError, RunError};
pub use runner::{
    certify, compare_oscillations, run_all, run_discrete, run_experiment, write_atomically,
    Certificate, ComparisonRecord, RunStatus, RunSummary,
};
