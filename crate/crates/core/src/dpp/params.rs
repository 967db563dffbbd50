use serde::{Deserialize, Serialize};

use crate::domain::ParabolicCylinder;
use crate::{Error, Result};

/// Full problem instance: weights, step length and the cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DppParams {
    pub alpha: f64,
    /// Always `1 - alpha`.
    pub beta: f64,
    pub epsilon: f64,
    pub cylinder: ParabolicCylinder,
}

impl DppParams {
    pub fn new(alpha: f64, cylinder: ParabolicCylinder) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0,1), got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            beta: 1.0 - alpha,
            epsilon: cylinder.epsilon,
            cylinder,
        })
    }

    pub fn dim(&self) -> usize {
        self.cylinder.dim()
    }

    pub fn time_step(&self) -> f64 {
        self.cylinder.time_step()
    }

    /// Number of recursion steps: the first lattice time `j eps^2/2 >= T`.
    pub fn slice_count(&self) -> usize {
        let ratio = self.cylinder.horizon / self.time_step();
        (ratio - 1e-9).ceil().max(1.0) as usize
    }
}
