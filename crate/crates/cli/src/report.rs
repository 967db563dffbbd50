//! Report JSON written by every command.

use midrange_core::analysis::CheckRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ProvenanceMap, RunConfig};
use crate::CliError;

pub const REPORT_VERSION: &str = concat!("midrange ", env!("CARGO_PKG_VERSION"));

/// JSON Schema (draft 2020-12) that every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub provenance: ProvenanceMap,
    /// True iff every check passed.
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
    /// Command-specific summaries (sidecars, per-run reports, estimates).
    pub details: Value,
    /// Files written next to the report, relative to the output directory.
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// The report as JSON with the timing block removed; identical across
    /// reruns with the same config and seed.
    pub fn deterministic_json(&self) -> Result<String, CliError> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(m) = &mut v {
            m.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// True when `pass` and every record's flag agree with the margins.
    pub fn consistent(&self) -> bool {
        self.checks.iter().all(CheckRecord::consistent)
            && self.pass == self.checks.iter().all(|c| c.pass)
    }
}
