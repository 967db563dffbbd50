use rayon::prelude::*;

use super::{DirectionSet, DiskQuadrature, DppParams, Field, FieldSidecar};
use crate::domain::{BoundaryData, SpatialGrid};
use crate::{Error, Result};

/// Receives each finished slice as the recursion advances.
pub trait SliceSink {
    fn slice(&mut self, j: usize, t: f64, values: &[f64]) -> Result<()>;
}

impl<F> SliceSink for F
where
    F: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    fn slice(&mut self, j: usize, t: f64, values: &[f64]) -> Result<()> {
        self(j, t, values)
    }
}

/// One evaluation point of the averaging operator relative to a node.
#[derive(Debug, Clone)]
struct Tap {
    offset: Vec<f64>,
    coef: f64,
    /// Flat index shift of the lower cell corner.
    delta: isize,
    /// Per-axis index shift of the lower cell corner.
    cell: [isize; 3],
    /// `coef` times the multilinear corner weights.
    weights: [f64; 8],
}

const CHUNK: usize = 1024;

/// Exact time-slice recursion. Slices are produced in order and only the
/// previous one is kept, so callers can stream arbitrarily many slices.
#[derive(Debug, Clone)]
pub struct Solver {
    params: DppParams,
    requested_horizon: f64,
    boundary: BoundaryData,
    grid: SpatialGrid,
    dirs: DirectionSet,
    quad: DiskQuadrature,
    /// `taps[k]` holds the `1 + Q` points of direction `k`.
    taps: Vec<Vec<Tap>>,
    /// Per direction, `(index shift, weight)` pairs of all taps and corners.
    stencils: Vec<Vec<(isize, f64)>>,
    corners: Vec<usize>,
    margin: usize,
}

impl Solver {
    pub fn new(
        params: &DppParams,
        boundary: &BoundaryData,
        grid: &SpatialGrid,
        dirs: &DirectionSet,
        quad: &DiskQuadrature,
    ) -> Result<Self> {
        let n = params.dim();
        if grid.space != params.cylinder.space {
            return Err(Error::InvalidParameter(
                "grid box differs from the cylinder box".into(),
            ));
        }
        if dirs.dim() != n || quad.n != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if dirs.dim() != n { dirs.dim() } else { quad.n },
            });
        }
        if dirs.is_empty() {
            return Err(Error::EmptyDirections);
        }
        if (params.epsilon - params.cylinder.epsilon).abs() > 0.0 {
            return Err(Error::InvalidParameter("epsilon differs from the cylinder".into()));
        }
        boundary.validate(n)?;

        let mut params = params.clone();
        let requested_horizon = params.cylinder.horizon;
        params.cylinder.horizon = params.slice_count() as f64 * params.time_step();

        let h = grid.spacing;
        let strides: Vec<usize> = (0..n).map(|a| grid.stride(a)).collect();
        let corners: Vec<usize> = (0..1usize << n)
            .map(|c| (0..n).filter(|a| c >> a & 1 == 1).map(|a| strides[a]).sum())
            .collect();
        let eps = params.epsilon;
        let make_tap = |offset: Vec<f64>, coef: f64| {
            let mut delta = 0isize;
            let mut frac = [0.0; 3];
            let mut cell = [0isize; 3];
            for a in 0..n {
                let u = offset[a] / h;
                let fl = u.floor();
                frac[a] = u - fl;
                cell[a] = fl as isize;
                delta += fl as isize * strides[a] as isize;
            }
            let mut weights = [0.0; 8];
            for (c, w) in weights.iter_mut().enumerate().take(1 << n) {
                *w = coef;
                for (a, f) in frac.iter().enumerate().take(n) {
                    *w *= if c >> a & 1 == 1 { *f } else { 1.0 - f };
                }
            }
            Tap {
                offset,
                coef,
                delta,
                cell,
                weights,
            }
        };
        let taps: Vec<Vec<Tap>> = (0..dirs.len())
            .map(|k| {
                let frame = dirs.frame(k);
                let mut list = vec![make_tap(
                    dirs.get(k).iter().map(|v| eps * v).collect(),
                    params.alpha,
                )];
                for (node, w) in quad.nodes.iter().zip(&quad.weights) {
                    let ph = frame.apply(node);
                    list.push(make_tap(
                        ph.iter().map(|v| eps * v).collect(),
                        params.beta * w,
                    ));
                }
                list
            })
            .collect();
        let margin = (eps / h - 1e-9).ceil() as usize + 1;
        let stencils = taps
            .iter()
            .map(|list: &Vec<Tap>| {
                list.iter()
                    .flat_map(|tap| {
                        corners
                            .iter()
                            .zip(tap.weights)
                            .map(move |(&c, w)| (tap.delta + c as isize, w))
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            params,
            requested_horizon,
            boundary: boundary.clone(),
            grid: grid.clone(),
            dirs: dirs.clone(),
            quad: quad.clone(),
            taps,
            stencils,
            corners,
            margin,
        })
    }

    pub fn params(&self) -> &DppParams {
        &self.params
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn slice_count(&self) -> usize {
        self.params.slice_count()
    }

    fn slice_time(&self, j: usize) -> f64 {
        j as f64 * self.params.time_step()
    }

    /// Runs the recursion, handing every slice `0..=J` to `sink`.
    /// Returns the range of all boundary values that were evaluated.
    pub fn march<S: SliceSink>(&self, sink: &mut S) -> Result<(f64, f64)> {
        let count = self.grid.node_count();
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);

        let mut prev = vec![0.0; count];
        let parts: Vec<Result<(f64, f64)>> = prev
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut r = (f64::INFINITY, f64::NEG_INFINITY);
                for (i, v) in chunk.iter_mut().enumerate() {
                    let x = self.grid.node(c * CHUNK + i);
                    *v = self.boundary.eval(&x, 0.0)?;
                    r = (r.0.min(*v), r.1.max(*v));
                }
                Ok(r)
            })
            .collect();
        range = merge(range, parts)?;
        check_finite(&prev, 0)?;
        sink.slice(0, 0.0, &prev)?;

        let mut next = vec![0.0; count];
        let row_len = self.grid.nodes_per_axis;
        for j in 1..=self.slice_count() {
            let parts: Vec<Result<(f64, f64)>> = next
                .par_chunks_mut(row_len)
                .enumerate()
                .map(|(row, chunk)| self.update_row(row, j, &prev, chunk))
                .collect();
            range = merge(range, parts)?;
            check_finite(&next, j)?;
            sink.slice(j, self.slice_time(j), &next)?;
            std::mem::swap(&mut prev, &mut next);
        }
        Ok(range)
    }

    /// Sidecar for a streamed run that observed `boundary_range`.
    pub fn sidecar(&self, boundary_range: (f64, f64)) -> FieldSidecar {
        FieldSidecar {
            params: self.params.clone(),
            requested_horizon: self.requested_horizon,
            grid_spacing: self.grid.spacing,
            requested_grid_spacing: self.grid.requested_spacing,
            nodes_per_axis: self.grid.nodes_per_axis,
            slices: self.slice_count() + 1,
            directions: self.dirs.len(),
            quadrature_order: self.quad.order,
            boundary: self.boundary.clone(),
            boundary_expression: self.boundary.to_expression_string(self.grid.dim()),
            time_phase: 0.0,
            boundary_range,
        }
    }

    /// Runs the recursion and keeps every slice.
    pub fn solve(&self) -> Result<Field> {
        self.solve_window(|_| true)
    }

    /// Runs the recursion and keeps only the slices whose time satisfies
    /// `keep`. Slice indices of the result then no longer match lattice
    /// indices, so such a field suits time-window analyses but not the
    /// game strategies.
    pub fn solve_window(&self, keep: impl Fn(f64) -> bool) -> Result<Field> {
        let mut values = Vec::new();
        let mut times = Vec::new();
        let range = self.march(&mut |_j: usize, t: f64, v: &[f64]| {
            if keep(t) {
                times.push(t);
                values.push(v.to_vec());
            }
            Ok(())
        })?;
        if values.is_empty() {
            return Err(Error::InvalidParameter("no slice selected".into()));
        }
        Ok(Field {
            params: self.params.clone(),
            requested_horizon: self.requested_horizon,
            boundary: self.boundary.clone(),
            grid: self.grid.clone(),
            dirs: self.dirs.clone(),
            quad: self.quad.clone(),
            slice_times: times,
            values,
            boundary_range: range,
        })
    }

    /// Updates one grid row (all nodes sharing every index but the last).
    /// Deep segments are swept direction by direction so that the inner
    /// loop is a contiguous multiply-add.
    fn update_row(
        &self,
        row: usize,
        j: usize,
        prev: &[f64],
        out: &mut [f64],
    ) -> Result<(f64, f64)> {
        let n = self.grid.dim();
        let per_axis = self.grid.nodes_per_axis;
        let last = per_axis - 1;
        let mut r = (f64::INFINITY, f64::NEG_INFINITY);
        let mut rest = row;
        let mut row_deep = true;
        for _ in 0..n - 1 {
            let i = rest % per_axis;
            rest /= per_axis;
            row_deep &= i >= self.margin && i + self.margin <= last;
        }
        let (lo_i, hi_i) = (self.margin, last.saturating_sub(self.margin));
        let fast = row_deep && j >= 2 && lo_i <= hi_i;
        for (i, v) in out.iter_mut().enumerate() {
            if !fast || i < lo_i || i > hi_i {
                *v = self.update_node(row * per_axis + i, j, prev, &mut r)?;
            }
        }
        if fast {
            let len = hi_i - lo_i + 1;
            let start = row * per_axis + lo_i;
            let mut acc = vec![0.0; len];
            let mut hi = vec![f64::NEG_INFINITY; len];
            let mut lo = vec![f64::INFINITY; len];
            for stencil in &self.stencils {
                acc.iter_mut().for_each(|a| *a = 0.0);
                for &(shift, w) in stencil {
                    let from = (start as isize + shift) as usize;
                    let src = &prev[from..from + len];
                    for (a, p) in acc.iter_mut().zip(src) {
                        *a += w * p;
                    }
                }
                for ((a, h), l) in acc.iter().zip(&mut hi).zip(&mut lo) {
                    *h = h.max(*a);
                    *l = l.min(*a);
                }
            }
            for (k, v) in out[lo_i..=hi_i].iter_mut().enumerate() {
                *v = 0.5 * (hi[k] + lo[k]);
            }
        }
        Ok(r)
    }

    fn update_node(
        &self,
        flat: usize,
        j: usize,
        prev: &[f64],
        range: &mut (f64, f64),
    ) -> Result<f64> {
        let n = self.grid.dim();
        let per_axis = self.grid.nodes_per_axis;
        let last = per_axis - 1;
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for axis in (0..n).rev() {
            idx[axis] = rest % per_axis;
            rest /= per_axis;
        }
        let idx = &idx[..n];
        if idx.iter().any(|&i| i == 0 || i == last) {
            let v = self.boundary.eval(&self.grid.node(flat), self.slice_time(j))?;
            *range = (range.0.min(v), range.1.max(v));
            return Ok(v);
        }
        let deep = idx
            .iter()
            .all(|&i| i >= self.margin && i + self.margin <= last);
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        if deep && j >= 2 {
            for stencil in &self.stencils {
                let mut a = 0.0;
                for &(shift, w) in stencil {
                    a += w * prev[(flat as isize + shift) as usize];
                }
                hi = hi.max(a);
                lo = lo.min(a);
            }
        } else {
            let x = self.grid.node(flat);
            let t_prev = self.slice_time(j - 1);
            let mut y = vec![0.0; x.len()];
            for taps in &self.taps {
                let mut a = 0.0;
                for tap in taps {
                    for (k, yk) in y.iter_mut().enumerate() {
                        *yk = x[k] + tap.offset[k];
                    }
                    if j == 1 || !self.grid.space.contains_open(&y) {
                        let f = self.boundary.eval(&y, t_prev)?;
                        *range = (range.0.min(f), range.1.max(f));
                        a += tap.coef * f;
                    } else if (0..n).all(|k| {
                        let c = idx[k] as isize + tap.cell[k];
                        c >= 0 && c < last as isize
                    }) {
                        let base = (flat as isize + tap.delta) as usize;
                        for (c, w) in self.corners.iter().zip(&tap.weights) {
                            a += w * prev[base + c];
                        }
                    } else {
                        a += tap.coef * self.grid.interpolate(prev, &y)?;
                    }
                }
                hi = hi.max(a);
                lo = lo.min(a);
            }
        }
        Ok(0.5 * (hi + lo))
    }
}

fn merge(mut range: (f64, f64), parts: Vec<Result<(f64, f64)>>) -> Result<(f64, f64)> {
    for p in parts {
        let (lo, hi) = p?;
        range = (range.0.min(lo), range.1.max(hi));
    }
    Ok(range)
}

fn check_finite(values: &[f64], slice: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(Error::NonFinite { slice, node }),
        None => Ok(()),
    }
}

/// Solves the DPP on `grid` and returns every slice.
pub fn solve(
    params: &DppParams,
    boundary: &BoundaryData,
    grid: &SpatialGrid,
    dirs: &DirectionSet,
    quad: &DiskQuadrature,
) -> Result<Field> {
    Solver::new(params, boundary, grid, dirs, quad)?.solve()
}
