//! Experiment configuration, batch execution and trace output.

mod batch;
mod config;
mod output;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

use crate::problems::{ParseError, ProblemError};

pub use batch::{run_batch, worker_threads, RunOutcome, RunStatus, RunSummary};
pub use config::{BatchConfig, ExperimentConfig, ProblemSpec, SolverSpec, SyntheticSpec};
pub use output::{read_trace_csv, write_summary_json, write_trace_csv, TRACE_HEADER};
pub use stats::{estimate_fstar, fit_power_law, fit_rate, fit_rate_values};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read data file {}: {source}", path.display())]
    MissingData {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate run label {0:?}")]
    DuplicateLabel(String),
}
