use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DirectionSet, DiskQuadrature, DppParams};
use crate::domain::{classify, BoundaryData, PointClass, SpatialGrid};
use crate::{Error, Result};

/// Discrete solution: one array of nodal values per lattice time
/// `t_j = j eps^2 / 2`, `j = 0..=J`.
#[derive(Debug, Clone)]
pub struct Field {
    /// Parameters with the horizon rounded up to the lattice.
    pub params: DppParams,
    pub requested_horizon: f64,
    pub boundary: BoundaryData,
    pub grid: SpatialGrid,
    pub dirs: DirectionSet,
    pub quad: DiskQuadrature,
    pub slice_times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Min and max of every boundary evaluation made while solving.
    pub boundary_range: (f64, f64),
}

/// JSON companion of an exported field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub params: DppParams,
    pub requested_horizon: f64,
    pub grid_spacing: f64,
    pub requested_grid_spacing: f64,
    pub nodes_per_axis: usize,
    pub slices: usize,
    pub directions: usize,
    pub quadrature_order: usize,
    pub boundary: BoundaryData,
    pub boundary_expression: String,
    /// Lattice phase: slice times are `phase + j eps^2/2`.
    pub time_phase: f64,
    pub boundary_range: (f64, f64),
}

impl Field {
    pub fn last_slice(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, j: usize) -> f64 {
        self.slice_times[j]
    }

    /// Point evaluation of the discrete solution at `(x, t_j)`: boundary
    /// data on the strip, multilinear interpolation of slice `j` inside.
    pub fn eval_state(&self, x: &[f64], j: usize) -> Result<f64> {
        if j > self.last_slice() {
            return Err(Error::SliceOutOfRange {
                index: j,
                max: self.last_slice(),
            });
        }
        let t = self.slice_times[j];
        match classify(x, t, &self.params.cylinder)? {
            PointClass::ParabolicStrip => self.boundary.eval(x, t),
            PointClass::Interior => self.grid.interpolate(&self.values[j], x),
            PointClass::Outside => Err(Error::OutOfDomain { point: x.to_vec() }),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.values
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn sidecar(&self) -> FieldSidecar {
        FieldSidecar {
            params: self.params.clone(),
            requested_horizon: self.requested_horizon,
            grid_spacing: self.grid.spacing,
            requested_grid_spacing: self.grid.requested_spacing,
            nodes_per_axis: self.grid.nodes_per_axis,
            slices: self.values.len(),
            directions: self.dirs.len(),
            quadrature_order: self.quad.order,
            boundary: self.boundary.clone(),
            boundary_expression: self.boundary.to_expression_string(self.grid.dim()),
            time_phase: 0.0,
            boundary_range: self.boundary_range,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = FieldCsvWriter::new(out, &self.grid)?;
        for (j, vals) in self.values.iter().enumerate() {
            w.write_slice(j, self.slice_times[j], vals)?;
        }
        w.finish()
    }
}

/// Streams slices to CSV with header `j,t,i1..in,x1..xn,value`.
pub struct FieldCsvWriter<'g, W: Write> {
    out: std::io::BufWriter<W>,
    grid: &'g SpatialGrid,
}

impl<'g, W: Write> FieldCsvWriter<'g, W> {
    pub fn new(out: W, grid: &'g SpatialGrid) -> Result<Self> {
        let mut out = std::io::BufWriter::new(out);
        let n = grid.dim();
        let mut header = vec!["j".to_string(), "t".to_string()];
        header.extend((1..=n).map(|k| format!("i{k}")));
        header.extend((1..=n).map(|k| format!("x{k}")));
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out, grid })
    }

    pub fn write_slice(&mut self, j: usize, t: f64, values: &[f64]) -> Result<()> {
        let n = self.grid.dim();
        for (flat, v) in values.iter().enumerate() {
            let idx = self.grid.multi_index(flat);
            write!(self.out, "{j},{t}")?;
            for i in &idx {
                write!(self.out, ",{i}")?;
            }
            for (axis, i) in idx.iter().enumerate().take(n) {
                write!(self.out, ",{}", self.grid.coord(axis, *i))?;
            }
            writeln!(self.out, ",{v}")?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}


/// Reads back a field CSV into per-slice `(t, values)` arrays indexed like
/// `grid`.
pub fn read_field_csv<R: BufRead>(input: R, grid: &SpatialGrid) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = grid.dim();
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty field csv".into()))??;
    if header.split(',').count() != 3 + 2 * n {
        return Err(Error::Io(format!("unexpected header '{header}'")));
    }
    let mut slices: Vec<(f64, Vec<f64>)> = Vec::new();
    for line in lines {
        let line = line?;
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Io(format!("malformed row '{line}'"));
        if cols.len() != 3 + 2 * n {
            return Err(bad());
        }
        let j: usize = cols[0].parse().map_err(|_| bad())?;
        let t: f64 = cols[1].parse().map_err(|_| bad())?;
        let idx = cols[2..2 + n]
            .iter()
            .map(|c| c.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let v: f64 = cols[2 + 2 * n].parse().map_err(|_| bad())?;
        while slices.len() <= j {
            slices.push((t, vec![f64::NAN; grid.node_count()]));
        }
        slices[j].0 = t;
        slices[j].1[grid.flat_index(&idx)] = v;
    }
    Ok(slices)
}
