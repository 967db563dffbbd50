use super::{orthonormal_frame, DirectionSet, DiskQuadrature, Field, Frame};
use crate::{Error, Result};

/// Outcome of a discrete midrange over a direction set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Midrange {
    pub value: f64,
    pub max: f64,
    pub min: f64,
    /// Lowest index attaining the maximum.
    pub argmax: usize,
    /// Lowest index attaining the minimum.
    pub argmin: usize,
}

/// `alpha u(x + eps nu) + beta * avg_q u(x + eps P h_q)` for an arbitrary
/// evaluator `u`, with `P` a frame whose first column is `nu`.
pub fn averaging_fn<F>(
    alpha: f64,
    epsilon: f64,
    x: &[f64],
    frame: &Frame,
    quad: &DiskQuadrature,
    mut u: F,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let mut y = vec![0.0; n];
    for (k, yk) in y.iter_mut().enumerate() {
        *yk = x[k] + epsilon * frame.get(k, 0);
    }
    let pull = u(&y)?;
    let mut noise = 0.0;
    for (h, w) in quad.nodes.iter().zip(&quad.weights) {
        let ph = frame.apply(h);
        for k in 0..n {
            y[k] = x[k] + epsilon * ph[k];
        }
        noise += w * u(&y)?;
    }
    Ok(alpha * pull + (1.0 - alpha) * noise)
}

/// Half the sum of the max and min of the averaging operator over `dirs`.
pub fn midrange_fn<F>(
    alpha: f64,
    epsilon: f64,
    x: &[f64],
    dirs: &DirectionSet,
    quad: &DiskQuadrature,
    mut u: F,
) -> Result<Midrange>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if dirs.is_empty() {
        return Err(Error::EmptyDirections);
    }
    let mut best = Midrange {
        value: 0.0,
        max: f64::NEG_INFINITY,
        min: f64::INFINITY,
        argmax: 0,
        argmin: 0,
    };
    for i in 0..dirs.len() {
        let a = averaging_fn(alpha, epsilon, x, dirs.frame(i), quad, &mut u)?;
        if a > best.max {
            best.max = a;
            best.argmax = i;
        }
        if a < best.min {
            best.min = a;
            best.argmin = i;
        }
    }
    best.value = 0.5 * (best.max + best.min);
    Ok(best)
}

/// The averaging operator applied to slice `j` of a solved field.
pub fn averaging_op(
    field: &Field,
    x: &[f64],
    nu: &[f64],
    j: usize,
    quad: &DiskQuadrature,
) -> Result<f64> {
    let frame = orthonormal_frame(nu)?;
    let p = &field.params;
    averaging_fn(p.alpha, p.epsilon, x, &frame, quad, |y| field.eval_state(y, j))
}

/// The midrange of [`averaging_op`] over `dirs` on slice `j`.
pub fn midrange_op(
    field: &Field,
    x: &[f64],
    j: usize,
    dirs: &DirectionSet,
    quad: &DiskQuadrature,
) -> Result<Midrange> {
    let p = &field.params;
    midrange_fn(p.alpha, p.epsilon, x, dirs, quad, |y| field.eval_state(y, j))
}
