use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dpp::{midrange_fn, DirectionSet, DiskQuadrature, DppParams};
use crate::linalg::{dot, norm};
use crate::{Error, Result};

/// Coefficients of the limit equation `phi_t = c_inf Delta_inf^N phi + c_lap Delta phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    pub c_inf: f64,
    pub c_lap: f64,
}

pub fn effective_pde_coefficients(params: &DppParams) -> EffectiveCoefficients {
    effective_coefficients(params.alpha, params.dim())
}

pub fn effective_coefficients(alpha: f64, n: usize) -> EffectiveCoefficients {
    let noise = (1.0 - alpha) / (n as f64 + 1.0);
    EffectiveCoefficients {
        c_inf: alpha - noise,
        c_lap: noise,
    }
}

type Scalar = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type Vector = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// A closed-form function of `(x, t)` with its first and second spatial
/// derivatives and its time derivative.
#[derive(Clone)]
pub struct SmoothTestFunction {
    pub label: String,
    dim: usize,
    value: Scalar,
    gradient: Vector,
    /// Row-major `n x n`.
    hessian: Vector,
    time_derivative: Scalar,
}

impl std::fmt::Debug for SmoothTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothTestFunction")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

const SELF_CHECK_STEP: f64 = 1e-4;
const SELF_CHECK_TOL: f64 = 1e-6;

impl SmoothTestFunction {
    /// Builds the function and compares the supplied derivatives with
    /// central differences at a few probe points.
    pub fn new(
        label: &str,
        dim: usize,
        value: Scalar,
        gradient: Vector,
        hessian: Vector,
        time_derivative: Scalar,
    ) -> Result<Self> {
        let f = SmoothTestFunction {
            label: label.to_string(),
            dim,
            value,
            gradient,
            hessian,
            time_derivative,
        };
        let mut probes = vec![(vec![0.0; dim], 0.0)];
        for k in 0..dim {
            let mut p = vec![0.1; dim];
            p[k] = -0.4;
            probes.push((p, 0.05 * (k + 1) as f64));
        }
        let err = f.self_check(&probes, SELF_CHECK_STEP);
        if !(err <= SELF_CHECK_TOL) {
            return Err(Error::InvalidParameter(format!(
                "derivatives of '{label}' disagree with finite differences (relative error {err:e})"
            )));
        }
        Ok(f)
    }

    /// `phi = x^T H x / 2 + b.x + c + tau t` with `H` symmetric, row-major.
    pub fn quadratic(h: Vec<f64>, b: Vec<f64>, c: f64, tau: f64) -> Result<Self> {
        let n = b.len();
        if h.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: h.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if (h[i * n + j] - h[j * n + i]).abs() > 1e-14 {
                    return Err(Error::InvalidParameter("hessian must be symmetric".into()));
                }
            }
        }
        let (h1, h2, b1, b2) = (h.clone(), h.clone(), b.clone(), b);
        let matvec = move |h: &[f64], x: &[f64]| -> Vec<f64> {
            (0..x.len())
                .map(|i| dot(&h[i * x.len()..(i + 1) * x.len()], x))
                .collect()
        };
        Self::new(
            "quadratic",
            n,
            Arc::new(move |x, t| 0.5 * dot(x, &matvec(&h1, x)) + dot(&b1, x) + c + tau * t),
            Arc::new(move |x, _| {
                matvec(&h2, x)
                    .iter()
                    .zip(&b2)
                    .map(|(u, v)| u + v)
                    .collect()
            }),
            Arc::new(move |_, _| h.clone()),
            Arc::new(move |_, _| tau),
        )
    }

    pub fn linear(a: Vec<f64>, c: f64) -> Result<Self> {
        let n = a.len();
        let a2 = a.clone();
        Self::new(
            "linear",
            n,
            Arc::new(move |x, _| dot(&a, x) + c),
            Arc::new(move |_, _| a2.clone()),
            Arc::new(move |_, _| vec![0.0; n * n]),
            Arc::new(|_, _| 0.0),
        )
    }

    /// `exp(alpha k^2 t + k x1)` in `n` dimensions.
    pub fn exp_heat(n: usize, k: f64, alpha: f64) -> Result<Self> {
        let rate = alpha * k * k;
        let v = move |x: &[f64], t: f64| (rate * t + k * x[0]).exp();
        Self::new(
            "exp_heat",
            n,
            Arc::new(v),
            Arc::new(move |x, t| {
                let mut g = vec![0.0; n];
                g[0] = k * v(x, t);
                g
            }),
            Arc::new(move |x, t| {
                let mut h = vec![0.0; n * n];
                h[0] = k * k * v(x, t);
                h
            }),
            Arc::new(move |x, t| rate * v(x, t)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        (self.value)(x, t)
    }

    pub fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.gradient)(x, t)
    }

    pub fn hessian(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.hessian)(x, t)
    }

    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        (self.time_derivative)(x, t)
    }

    /// Largest relative mismatch between the analytic derivatives and
    /// central differences with step `step` over `points`.
    pub fn self_check(&self, points: &[(Vec<f64>, f64)], step: f64) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / (1.0 + scale);
        for (x, t) in points {
            let g = self.gradient(x, *t);
            let h = self.hessian(x, *t);
            let scale = self.value(x, *t).abs() + norm(&g) + norm(&h);
            for k in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += step;
                xm[k] -= step;
                let fd = (self.value(&xp, *t) - self.value(&xm, *t)) / (2.0 * step);
                worst = worst.max(rel(fd, g[k], scale));
                let gp = self.gradient(&xp, *t);
                let gm = self.gradient(&xm, *t);
                for i in 0..n {
                    let fd = (gp[i] - gm[i]) / (2.0 * step);
                    worst = worst.max(rel(fd, h[i * n + k], scale));
                }
            }
            let fd = (self.value(x, t + step) - self.value(x, t - step)) / (2.0 * step);
            worst = worst.max(rel(fd, self.time_derivative(x, *t), scale));
        }
        worst
    }
}

/// Normalized infinity Laplacian `<D^2 phi g, g>` with `g` the unit gradient.
pub fn normalized_infinity_laplacian(grad: &[f64], hess: &[f64]) -> Result<f64> {
    let n = grad.len();
    let len = norm(grad);
    if !(len > 0.0) {
        return Err(Error::InvalidParameter("vanishing gradient".into()));
    }
    let g: Vec<f64> = grad.iter().map(|v| v / len).collect();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += g[i] * hess[i * n + j] * g[j];
        }
    }
    Ok(s)
}

/// Consistency residual of the scheme at `(x, t)`:
/// `[midrange A phi(x, ., t - eps^2/2) - phi(x, t)] / (eps^2/2) + phi_t
///  - c_inf Delta_inf^N phi - c_lap Delta phi`.
pub fn expansion_residual(
    phi: &SmoothTestFunction,
    x: &[f64],
    t: f64,
    params: &DppParams,
    dirs: &DirectionSet,
    quad: &DiskQuadrature,
) -> Result<f64> {
    let n = params.dim();
    for got in [x.len(), phi.dim(), dirs.dim(), quad.n] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let grad = phi.gradient(x, t);
    let hess = phi.hessian(x, t);
    let inf_lap = normalized_infinity_laplacian(&grad, &hess).map_err(|_| {
        Error::InvalidParameter(format!("gradient of '{}' vanishes at {x:?}", phi.label))
    })?;
    let lap: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let dt = params.time_step();
    let base = phi.value(x, t);
    let m = midrange_fn(params.alpha, params.epsilon, x, dirs, quad, |y| {
        Ok(phi.value(y, t - dt) - base)
    })?;
    let c = effective_pde_coefficients(params);
    Ok(m.value / dt + phi.time_derivative(x, t) - c.c_inf * inf_lap - c.c_lap * lap)
}

/// A bound on `|expansion_residual|` for a quadratic with Hessian `hess`
/// evaluated at a point with value `phi_x`: the discrete sup and inf miss
/// the gradient direction by at most the covering angle `rho`, which moves
/// `nu^T H nu` by at most `2 |H| rho` on each side. The quadrature is exact
/// on quadratics. A floating-point allowance for the division by
/// `eps^2/2` is added.
pub fn quadratic_residual_tolerance(
    params: &DppParams,
    hess: &[f64],
    phi_x: f64,
    dirs: &DirectionSet,
) -> f64 {
    let c = effective_pde_coefficients(params);
    let h_norm = norm(hess);
    let rho = dirs.covering_angle();
    let rounding = 64.0 * f64::EPSILON * (1.0 + phi_x.abs()) / params.time_step();
    4.0 * c.c_inf.abs() * h_norm * rho + rounding
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ParabolicCylinder, SpaceBox};
    use crate::dpp::{direction_set, disk_quadrature};

    fn params(n: usize, alpha: f64, eps: f64) -> DppParams {
        let cyl = ParabolicCylinder::new(SpaceBox::centered(n, 1.0).unwrap(), 1.0, eps).unwrap();
        DppParams::new(alpha, cyl).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let c = effective_pde_coefficients(&params(2, 0.5, 0.1));
        assert!((c.c_inf - 1.0 / 3.0).abs() < 1e-15 && (c.c_lap - 1.0 / 6.0).abs() < 1e-15);
        let c = effective_pde_coefficients(&params(3, 0.5, 0.1));
        assert!((c.c_inf - 0.375).abs() < 1e-15 && (c.c_lap - 0.125).abs() < 1e-15);
        let c = effective_coefficients(1.0 - 1e-12, 2);
        assert!((c.c_inf - 1.0).abs() < 1e-11 && c.c_lap < 1e-12);
    }

    #[test]
    fn linear_residual_vanishes() {
        let p = params(2, 0.4, 0.05);
        let phi = SmoothTestFunction::linear(vec![1.0, 0.0], 0.0).unwrap();
        let d = direction_set(2, 16).unwrap();
        let q = disk_quadrature(2, 2).unwrap();
        let r = expansion_residual(&phi, &[0.2, 0.1], 0.3, &p, &d, &q).unwrap();
        assert!(r.abs() < 1e-9, "{r}");
    }

    #[test]
    fn squared_norm_residual_is_exact() {
        let phi = SmoothTestFunction::quadratic(vec![2.0, 0.0, 0.0, 2.0], vec![0.0; 2], 0.0, 0.0)
            .unwrap();
        let d = direction_set(2, 8).unwrap();
        let q = disk_quadrature(2, 2).unwrap();
        for alpha in [0.2, 0.5, 0.9] {
            let p = params(2, alpha, 0.1);
            let r = expansion_residual(&phi, &[0.5, 0.0], 0.0, &p, &d, &q).unwrap();
            assert!(r.abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn vanishing_gradient_is_rejected() {
        let phi = SmoothTestFunction::quadratic(vec![2.0, 0.0, 0.0, 2.0], vec![0.0; 2], 0.0, 0.0)
            .unwrap();
        let d = direction_set(2, 8).unwrap();
        let q = disk_quadrature(2, 2).unwrap();
        assert!(expansion_residual(&phi, &[0.0, 0.0], 0.0, &params(2, 0.5, 0.1), &d, &q).is_err());
    }

    #[test]
    fn wrong_derivative_fails_self_check() {
        let bad = SmoothTestFunction::new(
            "bad",
            1,
            Arc::new(|x, _| x[0] * x[0]),
            Arc::new(|x, _| vec![x[0]]),
            Arc::new(|_, _| vec![2.0]),
            Arc::new(|_, _| 0.0),
        );
        assert!(bad.is_err());
        assert!(SmoothTestFunction::exp_heat(3, 1.5, 0.3).is_ok());
    }
}
