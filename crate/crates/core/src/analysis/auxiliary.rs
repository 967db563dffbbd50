use serde::{Deserialize, Serialize};

use crate::linalg::{add, norm, sub};
use crate::{Error, Result};

/// `omega(t) = t - omega0 t^gamma` on `[0, omega1]`,
/// `omega1 = (2 gamma omega0)^(-1/(gamma-1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaParams {
    pub gamma: f64,
    pub omega0: f64,
}

impl OmegaParams {
    pub fn new(gamma: f64, omega0: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (1,2), got {gamma}"
            )));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be positive, got {omega0}"
            )));
        }
        Ok(OmegaParams { gamma, omega0 })
    }

    pub fn omega1(&self) -> f64 {
        (2.0 * self.gamma * self.omega0).powf(-1.0 / (self.gamma - 1.0))
    }

    fn check_arg(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.omega1()) {
            return Err(Error::InvalidParameter(format!(
                "omega is only defined on [0, {}], got {t}",
                self.omega1()
            )));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        Ok(t - self.omega0 * t.powf(self.gamma))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        Ok(1.0 - self.gamma * self.omega0 * t.powf(self.gamma - 1.0))
    }

    /// Second derivative; `-inf` at `t = 0`.
    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        self.check_arg(t)?;
        Ok(-self.gamma * (self.gamma - 1.0) * self.omega0 * t.powf(self.gamma - 2.0))
    }

    fn third_derivative_abs(&self, t: f64) -> f64 {
        let g = self.gamma;
        g * (g - 1.0) * (2.0 - g) * self.omega0 * t.powf(g - 3.0)
    }
}

/// The comparison functions `f1`, `f2`, `g` and `H = f1 - f2 + g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryFunctions {
    pub c: f64,
    pub m: f64,
    /// Number of annuli `N`.
    pub n_annuli: u32,
    pub delta: f64,
    pub epsilon: f64,
    pub r: f64,
    /// Added to field times before `g` is evaluated, mapping the solved
    /// window onto `(-2r^2, 0)`.
    pub time_shift: f64,
    /// When set, `f1` uses `C omega(|x - z|)` in place of `C |x - z|^delta`.
    pub omega: Option<OmegaParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxFunction {
    F1,
    F2,
    G,
    H,
    Omega,
}

/// Arguments for [`aux_eval`]. `omega` reads its scalar from `t`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuxArgs {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub t: f64,
    pub s: f64,
}

impl AuxiliaryFunctions {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 1.0 && self.m > 1.0) {
            return Err(Error::InvalidParameter("C and M must exceed 1".into()));
        }
        if self.n_annuli == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1], got {}",
                self.delta
            )));
        }
        if !(self.epsilon > 0.0 && self.r > 0.0) {
            return Err(Error::InvalidParameter("epsilon and r must be positive".into()));
        }
        if let Some(w) = self.omega {
            OmegaParams::new(w.gamma, w.omega0)?;
        }
        Ok(())
    }

    fn pair(&self, x: &[f64], z: &[f64]) -> Result<(f64, f64)> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: z.len(),
            });
        }
        Ok((norm(&sub(x, z)), norm(&add(x, z))))
    }

    pub fn f1(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        let (d, s) = self.pair(x, z)?;
        let head = match self.omega {
            Some(w) => self.c * w.value(d)?,
            None => self.c * d.powf(self.delta),
        };
        Ok(head + self.m * s * s)
    }

    /// Index `i` of the annulus `(i-1) eps/10 < |x-z| <= i eps/10`, or `None`
    /// beyond `N eps / 10`. `i = 0` is the diagonal `x = z`.
    pub fn annulus(&self, x: &[f64], z: &[f64]) -> Result<Option<u32>> {
        let (d, _) = self.pair(x, z)?;
        let width = self.epsilon / 10.0;
        let i = (d / width * (1.0 - 1e-14)).ceil();
        Ok((i <= self.n_annuli as f64).then_some(i as u32))
    }

    pub fn f2(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        Ok(match self.annulus(x, z)? {
            Some(i) => {
                self.c.powi(2 * (self.n_annuli - i) as i32) * self.epsilon.powf(self.delta)
            }
            None => 0.0,
        })
    }

    pub fn g(&self, t: f64, s: f64) -> Result<f64> {
        let r2 = self.r * self.r;
        let half_step = 0.5 * self.epsilon * self.epsilon;
        let mut best = f64::NEG_INFINITY;
        for tau in [t, s] {
            let shifted = tau + self.time_shift;
            if !(shifted >= -2.0 * r2 - half_step && shifted <= half_step) {
                return Err(Error::InvalidParameter(format!(
                    "g: shifted time {shifted} outside [-2r^2 - eps^2/2, eps^2/2]"
                )));
            }
            let v = self.m * ((shifted - r2).abs().powf(0.5 * self.delta) - self.r.powf(self.delta));
            best = best.max(v);
        }
        Ok(best)
    }

    pub fn h(&self, x: &[f64], z: &[f64], t: f64, s: f64) -> Result<f64> {
        Ok(self.f1(x, z)? - self.f2(x, z)? + self.g(t, s)?)
    }
}

pub fn aux_eval(aux: &AuxiliaryFunctions, which: AuxFunction, args: &AuxArgs) -> Result<f64> {
    aux.validate()?;
    match which {
        AuxFunction::F1 => aux.f1(&args.x, &args.z),
        AuxFunction::F2 => aux.f2(&args.x, &args.z),
        AuxFunction::G => aux.g(args.t, args.s),
        AuxFunction::H => aux.h(&args.x, &args.z, args.t, args.s),
        AuxFunction::Omega => aux
            .omega
            .ok_or_else(|| Error::InvalidParameter("no omega parameters configured".into()))?
            .value(args.t),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub gamma: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub samples: usize,
    pub min_derivative: f64,
    pub max_derivative: f64,
    pub max_second_derivative: f64,
    /// Largest `|central difference - omega'|` minus its truncation bound.
    pub fd_excess: f64,
    pub increasing: bool,
    /// Slack allowed on the derivative bounds `[1/2, 1]`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Samples `(0, omega1]` and checks `omega' in [1/2, 1]`, `omega'' < 0`,
/// monotonicity and agreement of `omega'` with central differences.
pub fn omega_check(gamma: f64, omega0: f64, samples: usize) -> Result<OmegaReport> {
    let w = OmegaParams::new(gamma, omega0)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("omega_check needs at least 2 samples".into()));
    }
    let w1 = w.omega1();
    let tol = 1e-12;
    let mut min_d = f64::INFINITY;
    let mut max_d = f64::NEG_INFINITY;
    let mut max_dd = f64::NEG_INFINITY;
    let mut fd_excess = f64::NEG_INFINITY;
    let mut increasing = w.value(0.0)? == 0.0;
    let mut prev = 0.0;
    for i in 1..=samples {
        let t = w1 * i as f64 / samples as f64;
        let t = if i == samples { w1 } else { t };
        let d = w.derivative(t)?;
        min_d = min_d.min(d);
        max_d = max_d.max(d);
        max_dd = max_dd.max(w.second_derivative(t)?);
        let v = w.value(t)?;
        increasing &= v > prev;
        prev = v;
        if i < samples {
            let h = 0.1 * t.min(w1 - t);
            let fd = (w.value(t + h)? - w.value(t - h)?) / (2.0 * h);
            let bound = h * h / 6.0 * w.third_derivative_abs(t - h) + 8.0 * f64::EPSILON * w1 / h;
            fd_excess = fd_excess.max((fd - d).abs() - bound);
        }
    }
    let pass = min_d >= 0.5 - tol
        && max_d <= 1.0 + tol
        && max_dd < 0.0
        && increasing
        && fd_excess <= 0.0;
    Ok(OmegaReport {
        gamma,
        omega0,
        omega1: w1,
        samples,
        min_derivative: min_d,
        max_derivative: max_d,
        max_second_derivative: max_dd,
        fd_excess,
        increasing,
        tolerance: tol,
        pass,
    })
}
