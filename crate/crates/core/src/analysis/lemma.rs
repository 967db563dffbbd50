use serde::{Deserialize, Serialize};

use super::QRegion;
use crate::domain::SpatialGrid;
use crate::dpp::{midrange_fn, DirectionSet, DiskQuadrature, DppParams, Field};
use crate::linalg::dot;
use crate::{Error, Result};

pub const TIME_OSC_FACTOR: f64 = 18.0;
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeOscReport {
    pub region: QRegion,
    /// `max |u(x,t) - u(x,s)|` over nodes `x` in `B_r` and window slices.
    pub lhs: f64,
    /// Largest oscillation over `B_{r+eps}` on a single window slice.
    pub slice_oscillation: f64,
    /// `18 * slice_oscillation`.
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub slices: usize,
    pub time_shift: f64,
}

/// Streaming form of [`time_osc_check`]: feed slices in any order, keeping
/// only per-node extrema.
#[derive(Debug, Clone)]
pub struct TimeOscAccumulator {
    region: QRegion,
    inner: Vec<usize>,
    outer: Vec<usize>,
    node_max: Vec<f64>,
    node_min: Vec<f64>,
    slice_osc: f64,
    slices: usize,
}

impl TimeOscAccumulator {
    pub fn new(grid: &SpatialGrid, params: &DppParams, region: &QRegion) -> Result<Self> {
        region.validate(params)?;
        let outer_r = region.radius + params.epsilon;
        let space = &params.cylinder.space;
        let fits = (0..space.dim()).all(|k| {
            (region.center[k] - space.center[k]).abs() + outer_r <= space.half_width
        });
        if !fits {
            return Err(Error::InvalidParameter(
                "B_{r+eps} must lie in the closed box".into(),
            ));
        }
        let inner = region.nodes_within(grid, region.radius);
        let outer = region.nodes_within(grid, outer_r);
        if inner.is_empty() {
            return Err(Error::InvalidParameter("no grid node inside B_r".into()));
        }
        Ok(TimeOscAccumulator {
            region: region.clone(),
            node_max: vec![f64::NEG_INFINITY; inner.len()],
            node_min: vec![f64::INFINITY; inner.len()],
            inner,
            outer,
            slice_osc: 0.0,
            slices: 0,
        })
    }

    pub fn feed(&mut self, t: f64, values: &[f64]) {
        if !self.region.in_window(t) {
            return;
        }
        self.slices += 1;
        for (k, &f) in self.inner.iter().enumerate() {
            self.node_max[k] = self.node_max[k].max(values[f]);
            self.node_min[k] = self.node_min[k].min(values[f]);
        }
        let (lo, hi) = self
            .outer
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| {
                (lo.min(values[f]), hi.max(values[f]))
            });
        self.slice_osc = self.slice_osc.max(hi - lo);
    }

    pub fn finish(self) -> Result<TimeOscReport> {
        if self.slices < 2 {
            return Err(Error::InvalidParameter(format!(
                "time window holds {} slice(s); two are needed",
                self.slices
            )));
        }
        let lhs = self
            .node_max
            .iter()
            .zip(&self.node_min)
            .fold(0.0f64, |m, (hi, lo)| m.max(hi - lo));
        let rhs = TIME_OSC_FACTOR * self.slice_osc;
        let margin = lhs - rhs;
        Ok(TimeOscReport {
            time_shift: self.region.time_shift(),
            region: self.region,
            lhs,
            slice_oscillation: self.slice_osc,
            rhs,
            margin,
            tolerance: IDENTITY_TOL,
            pass: margin <= IDENTITY_TOL,
            slices: self.slices,
        })
    }
}

/// Compares time variation at fixed `x` with 18 times the largest spatial
/// oscillation on one `eps^2/2` slice, over the region's window.
pub fn time_osc_check(field: &Field, region: &QRegion) -> Result<TimeOscReport> {
    let mut acc = TimeOscAccumulator::new(&field.grid, &field.params, region)?;
    for (j, values) in field.values.iter().enumerate() {
        acc.feed(field.time(j), values);
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    /// `c + 7 A t / r^2 + 2 A |x|^2 / r^2`
    Upper,
    /// `c - 7 A t / r^2 - 2 A |x|^2 / r^2`
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub kind: BarrierKind,
    pub a: f64,
    pub r: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Largest `midrange A v(x, ., t - eps^2/2) - v(x, t)` over the samples,
    /// sign-flipped for the lower barrier.
    pub max_violation: f64,
    /// `-(3/2) A eps^2 / r^2`.
    pub bound: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
}

pub fn barrier_value(kind: BarrierKind, a: f64, r: f64, c: f64, x: &[f64], t: f64) -> f64 {
    let s = a / (r * r);
    let bump = 7.0 * s * t + 2.0 * s * dot(x, x);
    match kind {
        BarrierKind::Upper => c + bump,
        BarrierKind::Lower => c - bump,
    }
}

/// Evaluates the barrier's one-step defect at grid nodes of `B_r(0)` and
/// four times in `(-r^2, 0)`.
#[allow(clippy::too_many_arguments)]
pub fn barrier_check(
    kind: BarrierKind,
    a: f64,
    r: f64,
    c: f64,
    params: &DppParams,
    dirs: &DirectionSet,
    quad: &DiskQuadrature,
    grid: &SpatialGrid,
) -> Result<BarrierReport> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("A must be >= 0, got {a}")));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("r must lie in (0,1), got {r}")));
    }
    let eps = params.epsilon;
    let dt = params.time_step();
    let sign = match kind {
        BarrierKind::Upper => 1.0,
        BarrierKind::Lower => -1.0,
    };
    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for flat in 0..grid.node_count() {
        let x = grid.node(flat);
        if dot(&x, &x) >= r * r {
            continue;
        }
        for k in 1..=4 {
            let t = -r * r * k as f64 / 5.0;
            let v = barrier_value(kind, a, r, c, &x, t);
            let m = midrange_fn(params.alpha, eps, &x, dirs, quad, |y| {
                Ok(barrier_value(kind, a, r, c, y, t - dt) - v)
            })?;
            worst = worst.max(sign * m.value);
            samples += 1;
        }
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("no grid node inside B_r".into()));
    }
    let bound = -1.5 * a * eps * eps / (r * r);
    let tolerance = IDENTITY_TOL * (1.0 + c.abs() + 9.0 * a);
    let margin = worst - bound;
    Ok(BarrierReport {
        kind,
        a,
        r,
        c,
        epsilon: eps,
        max_violation: worst,
        bound,
        margin,
        tolerance,
        pass: margin <= tolerance,
        samples,
    })
}
