use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_m and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
            let dx = pm / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Averaging rule on the unit ball of `e1^perp`, nodes embedded in `R^n`
/// with first coordinate zero; weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskQuadrature {
    pub n: usize,
    pub order: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiskQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_q w_q (h_q)_axis^2`.
    pub fn second_moment(&self, axis: usize) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(h, w)| w * h[axis] * h[axis])
            .sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(h, w)| w * f(h)).sum()
    }
}

/// `n = 2`: Gauss-Legendre on the segment. `n = 3`: `m` radial
/// Gauss-Legendre points (weight `2r`) times `2m` equally spaced angles.
pub fn disk_quadrature(n: usize, m: usize) -> Result<DiskQuadrature> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature order must be at least 2, got {m}"
        )));
    }
    let (x, w) = gauss_legendre(m);
    let (nodes, weights) = match n {
        2 => (
            x.iter().map(|s| vec![0.0, *s]).collect(),
            w.iter().map(|wi| wi / 2.0).collect(),
        ),
        3 => {
            let angles = 2 * m;
            let mut nodes = Vec::with_capacity(m * angles);
            let mut weights = Vec::with_capacity(m * angles);
            for (xi, wi) in x.iter().zip(&w) {
                let r = 0.5 * (xi + 1.0);
                // (wi / 2) * 2r on [0, 1]
                let radial = wi * r;
                for j in 0..angles {
                    let th = 2.0 * PI * j as f64 / angles as f64;
                    nodes.push(vec![0.0, r * th.cos(), r * th.sin()]);
                    weights.push(radial / angles as f64);
                }
            }
            (nodes, weights)
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "disk quadrature is implemented for n = 2 and n = 3, got n = {n}"
            )))
        }
    };
    Ok(DiskQuadrature {
        n,
        order: m,
        nodes,
        weights,
    })
}
