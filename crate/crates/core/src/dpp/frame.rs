use serde::{Deserialize, Serialize};

use crate::linalg::{dot, norm};
use crate::{Error, Result};

/// Orthogonal matrix whose first column is a given unit vector. Stored
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    n: usize,
    m: Vec<f64>,
}

impl Frame {
    pub fn identity(n: usize) -> Self {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Self { n, m }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row * self.n + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, col)).collect()
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|r| (0..n).map(|c| self.m[r * n + c] * h[c]).sum())
            .collect()
    }

    pub fn compose(&self, rhs: &Frame) -> Frame {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                m[r * n + c] = (0..n).map(|k| self.get(r, k) * rhs.get(k, c)).sum();
            }
        }
        Frame { n, m }
    }

    /// Right-multiplies by `diag(signs)`.
    pub fn scale_columns(&self, signs: &[f64]) -> Frame {
        let mut out = self.clone();
        for row in out.m.chunks_mut(self.n) {
            for (v, s) in row.iter_mut().zip(signs) {
                *v *= s;
            }
        }
        out
    }

    /// `max |M^T M - I|` entrywise.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let g: f64 = (0..n).map(|k| self.get(k, a) * self.get(k, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        let g = |r, c| self.get(r, c);
        match self.n {
            2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
            3 => {
                g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                    - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                    + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
            }
            _ => f64::NAN,
        }
    }
}

fn check_unit(v: &[f64]) -> Result<()> {
    let len = norm(v);
    if !len.is_finite() || (len - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "expected a unit vector, got norm {len}"
        )));
    }
    Ok(())
}

/// Rotation in the plane spanned by unit vectors `a`, `b` taking `a` to `b`
/// and fixing the orthogonal complement. Every unit vector moves by at most
/// `|a - b|`. Antipodal input gets a half turn in a fixed plane.
pub fn minimal_rotation(a: &[f64], b: &[f64]) -> Frame {
    let n = a.len();
    let c = dot(a, b);
    let cm1 = -0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut w: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - c * ai).collect();
    let mut s = norm(&w);
    if s < 1e-300 || s < 1e-15 * cm1.abs() {
        if c > 0.0 {
            return Frame::identity(n);
        }
        // a == -b: pick the coordinate axis least aligned with a
        let k = (0..n)
            .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
            .unwrap();
        w = (0..n)
            .map(|i| if i == k { 1.0 } else { 0.0 } - a[k] * a[i])
            .collect();
        s = 0.0;
    }
    let proj = dot(&w, a);
    for (wi, ai) in w.iter_mut().zip(a) {
        *wi -= proj * ai;
    }
    let wn = norm(&w);
    for v in &mut w {
        *v /= wn;
    }
    let cm1 = if s == 0.0 { -2.0 } else { cm1 };
    let mut m = vec![0.0; n * n];
    for r in 0..n {
        for col in 0..n {
            let id = if r == col { 1.0 } else { 0.0 };
            m[r * n + col] = id
                + cm1 * (a[r] * a[col] + w[r] * w[col])
                + s * (w[r] * a[col] - a[r] * w[col]);
        }
    }
    Frame { n, m }
}

/// Deterministic element of `{M in O(n) : M e1 = nu}`.
pub fn orthonormal_frame(nu: &[f64]) -> Result<Frame> {
    let n = nu.len();
    if n < 2 {
        return Err(Error::InvalidParameter("dimension must be at least 2".into()));
    }
    check_unit(nu)?;
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    if nu[0] >= 0.0 {
        Ok(minimal_rotation(&e1, nu))
    } else {
        // half turn in the (e1, e2) plane first, then a short rotation
        e1[0] = -1.0;
        let mut signs = vec![1.0; n];
        signs[0] = -1.0;
        signs[1] = -1.0;
        Ok(minimal_rotation(&e1, nu).scale_columns(&signs))
    }
}

/// Frames `P_x, P_z` with `P_x e1 = nu_x`, `P_z e1 = nu_z` and
/// `|P_x h - P_z h| <= |nu_x + nu_z|` for every unit `h` orthogonal to `e1`.
///
/// `P_z = R (P_x diag(-1, 1, ..., 1))` with `R` the minimal rotation
/// taking `-nu_x` to `nu_z`.
pub fn paired_frames(nu_x: &[f64], nu_z: &[f64]) -> Result<(Frame, Frame)> {
    if nu_x.len() != nu_z.len() {
        return Err(Error::DimensionMismatch {
            expected: nu_x.len(),
            got: nu_z.len(),
        });
    }
    check_unit(nu_z)?;
    let px = orthonormal_frame(nu_x)?;
    let n = nu_x.len();
    let neg_x: Vec<f64> = nu_x.iter().map(|v| -v).collect();
    let mut flip = vec![1.0; n];
    flip[0] = -1.0;
    let pz = minimal_rotation(&neg_x, nu_z).compose(&px.scale_columns(&flip));
    Ok((px, pz))
}
