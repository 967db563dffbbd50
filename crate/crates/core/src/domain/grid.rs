use serde::{Deserialize, Serialize};

use super::SpaceBox;
use crate::{Error, Result};

/// Uniform Cartesian grid covering a closed [`SpaceBox`]. Nodes are stored
/// row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub space: SpaceBox,
    /// Effective spacing after adjustment.
    pub spacing: f64,
    /// Spacing that was asked for.
    pub requested_spacing: f64,
    /// Nodes per axis.
    pub nodes_per_axis: usize,
}

/// Builds a grid whose extreme nodes sit on the box faces. The requested
/// spacing is shrunk minimally so that it divides the box width.
pub fn make_grid(space: &SpaceBox, h: f64) -> Result<SpatialGrid> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "grid spacing must be positive, got {h}"
        )));
    }
    if h > space.half_width * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "grid spacing {h} exceeds the box half width {}",
            space.half_width
        )));
    }
    let width = 2.0 * space.half_width;
    let cells = ((width / h) - 1e-9).ceil().max(2.0) as usize;
    Ok(SpatialGrid {
        space: space.clone(),
        spacing: width / cells as f64,
        requested_spacing: h,
        nodes_per_axis: cells + 1,
    })
}

impl SpatialGrid {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim() as u32)
    }

    /// Stride of `axis` in the flat node index.
    pub fn stride(&self, axis: usize) -> usize {
        self.nodes_per_axis.pow((self.dim() - 1 - axis) as u32)
    }

    /// Coordinate of node `i` along `axis`; the last node lands exactly on
    /// the upper face.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.nodes_per_axis {
            self.space.upper(axis)
        } else {
            self.space.lower(axis) + i as f64 * self.spacing
        }
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let n = self.dim();
        let mut idx = vec![0; n];
        for axis in (0..n).rev() {
            idx[axis] = flat % self.nodes_per_axis;
            flat /= self.nodes_per_axis;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .fold(0, |acc, &i| acc * self.nodes_per_axis + i)
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coord(axis, i))
            .collect()
    }

    /// Multilinear interpolation of nodal `values` at `x`. The point must lie
    /// in the closed box; nothing is extrapolated.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Result<f64> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if !self.space.contains_closed(x, 0.0) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let last_cell = self.nodes_per_axis - 2;
        let mut base = 0usize;
        let mut frac = [0.0f64; 3];
        let mut strides = [0usize; 3];
        for axis in 0..n {
            let u = (x[axis] - self.space.lower(axis)) / self.spacing;
            let cell = (u.floor().max(0.0) as usize).min(last_cell);
            frac[axis] = (u - cell as f64).clamp(0.0, 1.0);
            strides[axis] = self.stride(axis);
            base += cell * strides[axis];
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut offset = 0;
            for axis in 0..n {
                if corner >> axis & 1 == 1 {
                    w *= frac[axis];
                    offset += strides[axis];
                } else {
                    w *= 1.0 - frac[axis];
                }
            }
            if w != 0.0 {
                acc += w * values[base + offset];
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let b = SpaceBox::centered(2, 1.0).unwrap();
        let g = make_grid(&b, 0.5).unwrap();
        assert_eq!(g.nodes_per_axis, 5);
        assert_eq!(g.spacing, 0.5);
        let xs: Vec<f64> = (0..5).map(|i| g.coord(0, i)).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);

        let g = make_grid(&b, 0.6).unwrap();
        assert_eq!(g.nodes_per_axis, 5);
        assert_eq!(g.spacing, 0.5);
        assert_eq!(g.requested_spacing, 0.6);

        let b3 = SpaceBox::centered(3, 1.0).unwrap();
        let g = make_grid(&b3, 1.0).unwrap();
        assert_eq!(g.nodes_per_axis, 3);
        assert_eq!(g.node_count(), 27);
    }

    #[test]
    fn rejects_bad_spacing() {
        let b = SpaceBox::centered(2, 1.0).unwrap();
        assert!(make_grid(&b, 0.0).is_err());
        assert!(make_grid(&b, -0.1).is_err());
        assert!(make_grid(&b, 1.5).is_err());
    }

    #[test]
    fn index_round_trip() {
        let b = SpaceBox::centered(3, 1.0).unwrap();
        let g = make_grid(&b, 0.5).unwrap();
        for flat in 0..g.node_count() {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.node(0), vec![-1.0, -1.0, -1.0]);
        assert_eq!(g.node(1), vec![-1.0, -1.0, -0.5]);
    }

    #[test]
    fn interpolation_at_nodes_and_midpoints() {
        let b = SpaceBox::centered(2, 1.0).unwrap();
        let g = make_grid(&b, 0.5).unwrap();
        let values: Vec<f64> = (0..g.node_count()).map(|k| (k * k) as f64).collect();
        for flat in 0..g.node_count() {
            assert_eq!(g.interpolate(&values, &g.node(flat)).unwrap(), values[flat]);
        }
        // midway along the last axis between nodes 6 and 7
        let mid = g.interpolate(&values, &[-0.5, -0.25]).unwrap();
        assert_eq!(mid, 0.5 * (values[6] + values[7]));
        assert!(g.interpolate(&values, &[1.1, 0.0]).is_err());
    }
}
