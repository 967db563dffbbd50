use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One verification outcome. Every check is phrased as
/// `value - bound <= tolerance`, so `pass == (margin <= tolerance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub parameters: Value,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub reference: String,
}

impl CheckRecord {
    /// Record for `value <= bound` within `tolerance`.
    pub fn upper(
        name: &str,
        parameters: Value,
        value: f64,
        bound: f64,
        tolerance: f64,
        reference: &str,
    ) -> Self {
        let margin = value - bound;
        CheckRecord {
            name: name.to_string(),
            parameters,
            value,
            bound,
            margin,
            tolerance,
            pass: margin <= tolerance,
            seed: None,
            reference: reference.to_string(),
        }
    }

    /// Record for `value >= bound` within `tolerance`; stored negated so the
    /// pass rule stays `margin <= tolerance`.
    pub fn lower(
        name: &str,
        parameters: Value,
        value: f64,
        bound: f64,
        tolerance: f64,
        reference: &str,
    ) -> Self {
        let mut r = Self::upper(name, parameters, -value, -bound, tolerance, reference);
        r.name = name.to_string();
        r
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// True when the stored pass flag agrees with margin and tolerance.
    pub fn consistent(&self) -> bool {
        self.pass == (self.margin <= self.tolerance)
    }
}
