use serde::{Deserialize, Serialize};

use crate::{Error, Result, EDGE_TOL};

/// Axis-aligned cube `center + [-half_width, half_width]^n`, the spatial
/// domain. Membership in the domain itself is strict (the domain is open).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceBox {
    pub center: Vec<f64>,
    pub half_width: f64,
}

impl SpaceBox {
    pub fn new(center: Vec<f64>, half_width: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be at least 2, got {}",
                center.len()
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("box center must be finite".into()));
        }
        Ok(Self { center, half_width })
    }

    /// The centered box `[-w, w]^n`.
    pub fn centered(n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![0.0; n], half_width)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - self.half_width
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + self.half_width
    }

    /// Strict interior membership, faces excluded with tolerance [`EDGE_TOL`].
    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.center)
            .all(|(xi, ci)| (xi - ci).abs() < self.half_width - EDGE_TOL)
    }

    /// Closed-box membership inflated by `pad`.
    pub fn contains_closed(&self, x: &[f64], pad: f64) -> bool {
        x.iter()
            .zip(&self.center)
            .all(|(xi, ci)| (xi - ci).abs() <= self.half_width + pad + EDGE_TOL)
    }

    /// Euclidean distance from an exterior point to the box; zero inside.
    pub fn exterior_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(xi, ci)| {
                let d = (xi - ci).abs() - self.half_width;
                if d > 0.0 {
                    d * d
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `Omega x (0, T]` together with the strip width `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCylinder {
    pub space: SpaceBox,
    pub horizon: f64,
    pub epsilon: f64,
}

impl ParabolicCylinder {
    pub fn new(space: SpaceBox, horizon: f64, epsilon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon T must be positive, got {horizon}"
            )));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if epsilon >= space.half_width {
            return Err(Error::InvalidParameter(format!(
                "epsilon ({epsilon}) must be smaller than the box half width ({})",
                space.half_width
            )));
        }
        Ok(Self {
            space,
            horizon,
            epsilon,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Time step of the recursion, `epsilon^2 / 2`.
    pub fn time_step(&self) -> f64 {
        0.5 * self.epsilon * self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointClass {
    Interior,
    ParabolicStrip,
    Outside,
}

/// Classifies a space-time point against `Omega_T` and its epsilon-strip.
///
/// Interior means `x` in the open box and `0 < t <= T`. The strip is the
/// lateral band `{x not in Omega, dist(x, dOmega) <= eps} x (-eps^2/2, T]`
/// together with the initial layer `Omega x (-eps^2/2, 0]`.
pub fn classify(x: &[f64], t: f64, cyl: &ParabolicCylinder) -> Result<PointClass> {
    let n = cyl.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let dt = cyl.time_step();
    let after_start = t > -dt + EDGE_TOL;
    let before_end = t <= cyl.horizon + EDGE_TOL;
    if !(after_start && before_end) {
        return Ok(PointClass::Outside);
    }
    let positive = t > EDGE_TOL;
    if cyl.space.contains_open(x) {
        return Ok(if positive {
            PointClass::Interior
        } else {
            PointClass::ParabolicStrip
        });
    }
    if cyl.space.exterior_distance(x) <= cyl.epsilon + EDGE_TOL {
        Ok(PointClass::ParabolicStrip)
    } else {
        Ok(PointClass::Outside)
    }
}
