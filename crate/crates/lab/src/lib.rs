//! Experiment runner for the stability library: configs in, deterministic
//! JSON/CSV reports out.

pub mod config;
pub mod report;
pub mod runner;

use thiserror::Error;
use triple_stab_core::linalg::LinalgError;
use triple_stab_core::stability::StabilityError;
use triple_stab_core::TripleError;

pub use config::{ExperimentConfig, GeneratorSpec, Overrides};
pub use report::{emit_report, render, render_json, Format, StabilityReport};
pub use runner::{run_axiom_suite, run_axioms, run_bounds, run_recovery};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "TRIPLE_STAB_THREADS";

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid config: {0}")]
    Gate(StabilityError),
    #[error(transparent)]
    Triple(#[from] TripleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("report: {0}")]
    Report(String),
}

/// Thread count from `TRIPLE_STAB_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, LabError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(LabError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}
