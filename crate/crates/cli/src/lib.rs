//! Batch front end for the midrange solver: reads a run config, executes
//! one command and writes its artifacts plus a JSON report.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, render, Command, ParsedConfig, Provenance, RunConfig};
pub use report::{Report, Timing, REPORT_SCHEMA, REPORT_VERSION};
pub use run::{apply_overrides, execute, RunOutcome, REPORT_FILE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] midrange_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    /// Exit status for a run that could not complete.
    pub const EXIT_CODE: i32 = 1;
}
