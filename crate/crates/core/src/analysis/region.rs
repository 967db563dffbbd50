use serde::{Deserialize, Serialize};

use crate::domain::SpatialGrid;
use crate::dpp::DppParams;
use crate::linalg::{norm, sub};
use crate::{Error, Result, EDGE_TOL};

/// Sub-cylinder `Q_r = B_r(center) x (top - r^2, top)` of a solved field.
/// The window `(-r^2, 0)` used in the estimates is shifted so that `0`
/// lands on `top`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    pub top: f64,
}

impl QRegion {
    /// Checks `closure(Q_{2r})` lies inside the solved cylinder, i.e.
    /// `B_{2r}(center)` in the open box and `0 < top - 4 r^2`, `top <= T`.
    pub fn validate(&self, params: &DppParams) -> Result<()> {
        let cyl = &params.cylinder;
        let n = cyl.dim();
        if self.center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.center.len(),
            });
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "region radius must be positive, got {}",
                self.radius
            )));
        }
        let space = &cyl.space;
        let room = (0..n)
            .map(|k| space.half_width - (self.center[k] - space.center[k]).abs())
            .fold(f64::INFINITY, f64::min);
        if 2.0 * self.radius >= room {
            return Err(Error::InvalidParameter(format!(
                "region is not interior: B_2r(center) with r = {} leaves the box",
                self.radius
            )));
        }
        let floor = self.top - 4.0 * self.radius * self.radius;
        if !(floor > 0.0) || self.top > cyl.horizon + EDGE_TOL {
            return Err(Error::InvalidParameter(format!(
                "region is not interior: time window (top - 4r^2, top] = ({floor}, {}] must lie in (0, {}]",
                self.top, cyl.horizon
            )));
        }
        Ok(())
    }

    /// Largest region centered in the box with top at the horizon that
    /// satisfies [`QRegion::validate`] and `r <= cap`.
    pub fn largest(params: &DppParams, cap: f64) -> QRegion {
        let cyl = &params.cylinder;
        let shrink = 1.0 - 1e-9;
        let time_r = (cyl.horizon / 4.0).sqrt();
        let space_r = 0.5 * cyl.space.half_width;
        QRegion {
            center: cyl.space.center.clone(),
            radius: cap.min(time_r).min(space_r) * shrink,
            top: cyl.horizon,
        }
    }

    pub fn in_window(&self, t: f64) -> bool {
        t > self.top - self.radius * self.radius + EDGE_TOL && t <= self.top + EDGE_TOL
    }

    pub fn contains_space(&self, x: &[f64], radius: f64) -> bool {
        norm(&sub(x, &self.center)) <= radius + EDGE_TOL
    }

    /// Flat indices of grid nodes within `radius` of the center.
    pub fn nodes_within(&self, grid: &SpatialGrid, radius: f64) -> Vec<usize> {
        (0..grid.node_count())
            .filter(|&f| self.contains_space(&grid.node(f), radius))
            .collect()
    }

    /// Time shift mapping a field time to the `(-r^2, 0)` window.
    pub fn time_shift(&self) -> f64 {
        -self.top
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ParabolicCylinder, SpaceBox};

    fn params(horizon: f64) -> DppParams {
        let cyl =
            ParabolicCylinder::new(SpaceBox::centered(2, 1.0).unwrap(), horizon, 0.1).unwrap();
        DppParams::new(0.5, cyl).unwrap()
    }

    #[test]
    fn interior_requirements() {
        let p = params(0.7);
        let ok = QRegion {
            center: vec![0.0, 0.0],
            radius: 0.4,
            top: 0.7,
        };
        assert!(ok.validate(&p).is_ok());
        let wide = QRegion { radius: 0.5, ..ok.clone() };
        assert!(wide.validate(&p).is_err());
        let early = QRegion { top: 0.6, ..ok.clone() };
        assert!(early.validate(&p).is_err());
        let r = QRegion::largest(&params(0.05), 0.4);
        assert!(r.validate(&params(0.05)).is_ok());
        assert!((r.radius - (0.05f64 / 4.0).sqrt()).abs() < 1e-8);
    }
}
