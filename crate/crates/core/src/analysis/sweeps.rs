use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expansion::{expansion_residual, quadratic_residual_tolerance, SmoothTestFunction};
use super::AuxiliaryFunctions;
use crate::domain::{ParabolicCylinder, SpaceBox};
use crate::dpp::{direction_set, paired_frames, DiskQuadrature, DppParams};
use crate::linalg::{add, norm, sub};
use crate::{Error, Result};

const IDENTITY_TOL: f64 = 1e-10;

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = norm(&v);
        if l > 0.1 && l <= 1.0 {
            return v.into_iter().map(|x| x / l).collect();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRotationReport {
    pub dim: usize,
    pub pairs: usize,
    pub vectors: usize,
    /// `max |P_x h - P_z h| - |nu_x + nu_z|` over all samples.
    pub max_excess: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

/// Samples `pairs` direction pairs and, for each, `vectors` unit `h`
/// orthogonal to `e1`, and measures how far `|P_x h - P_z h|` exceeds
/// `|nu_x + nu_z|` for the frames of [`paired_frames`]. A tenth of the
/// pairs are drawn close to antipodal and a tenth close to equal.
pub fn paired_rotation_check(
    n: usize,
    pairs: usize,
    vectors: usize,
    seed: u64,
) -> Result<PairedRotationReport> {
    if n < 2 || pairs == 0 || vectors == 0 {
        return Err(Error::InvalidParameter(
            "paired rotation check needs n >= 2 and positive sample counts".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for p in 0..pairs {
        let nu_x = random_unit(&mut rng, n);
        let nu_z = match p % 10 {
            0 | 1 => {
                let sign = if p % 10 == 0 { -1.0 } else { 1.0 };
                let scale = 10f64.powf(-rng.gen_range(2.0..10.0));
                let jitter = random_unit(&mut rng, n);
                let v: Vec<f64> = nu_x
                    .iter()
                    .zip(&jitter)
                    .map(|(a, j)| sign * a + scale * j)
                    .collect();
                let l = norm(&v);
                v.into_iter().map(|x| x / l).collect()
            }
            _ => random_unit(&mut rng, n),
        };
        let (px, pz) = paired_frames(&nu_x, &nu_z)?;
        let bound = norm(&add(&nu_x, &nu_z));
        for _ in 0..vectors {
            let mut h = random_unit(&mut rng, n - 1);
            h.insert(0, 0.0);
            let gap = norm(&sub(&px.apply(&h), &pz.apply(&h)));
            worst = worst.max(gap - bound);
        }
    }
    Ok(PairedRotationReport {
        dim: n,
        pairs,
        vectors,
        max_excess: worst,
        tolerance: IDENTITY_TOL,
        pass: worst <= IDENTITY_TOL,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxConsistencyReport {
    pub samples: usize,
    /// `max |H - (f1 - f2 + g)|` with every term recomputed from its
    /// closed form.
    pub reconstruction_error: f64,
    /// Largest spread of `f2` within one annulus.
    pub annulus_spread: f64,
    /// Largest increase of `f2` from an annulus to an outer one.
    pub monotonicity_violation: f64,
    /// Annulus indices hit by the samples.
    pub annuli_hit: usize,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

/// Samples point pairs concentrated near the diagonal and times in the
/// shifted window of `g`, and checks `H = f1 - f2 + g` pointwise and the
/// annulus structure of `f2`.
pub fn aux_consistency_check(
    aux: &AuxiliaryFunctions,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<AuxConsistencyReport> {
    aux.validate()?;
    if n < 1 || samples == 0 {
        return Err(Error::InvalidParameter(
            "aux consistency check needs n >= 1 and samples > 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = aux.epsilon / 10.0;
    let reach = 1.2 * aux.n_annuli as f64 * width;
    let reach = match aux.omega {
        Some(w) => reach.min(w.omega1()),
        None => reach,
    };
    let r2 = aux.r * aux.r;
    let mut recon = 0.0f64;
    let mut per_annulus: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for k in 0..samples {
        let x: Vec<f64> = random_unit(&mut rng, n.max(2))[..n]
            .iter()
            .map(|v| v * aux.r * rng.gen_range(0.0..1.0))
            .collect();
        let d = if k % 50 == 0 { 0.0 } else { rng.gen_range(0.0..reach) };
        let u = if n == 1 { vec![1.0] } else { random_unit(&mut rng, n) };
        let z: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + d * b).collect();
        let t = rng.gen_range(-2.0 * r2..=0.0) - aux.time_shift;
        let s = rng.gen_range(-2.0 * r2..=0.0) - aux.time_shift;

        let dist = norm(&sub(&x, &z));
        let sum = norm(&add(&x, &z));
        let f1 = match aux.omega {
            Some(w) => {
                let g = w.gamma;
                aux.c * (dist - w.omega0 * dist.powf(g))
            }
            None => aux.c * dist.powf(aux.delta),
        } + aux.m * sum * sum;
        let f2 = aux.f2(&x, &z)?;
        let g = [t, s]
            .iter()
            .map(|tau| {
                let shifted = tau + aux.time_shift;
                aux.m * ((shifted - r2).abs().powf(0.5 * aux.delta) - aux.r.powf(aux.delta))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let h = aux.h(&x, &z, t, s)?;
        let scale = 1.0 + f1.abs() + f2.abs() + g.abs();
        recon = recon.max((h - (f1 - f2 + g)).abs() / scale);

        if let Some(i) = aux.annulus(&x, &z)? {
            let e = per_annulus.entry(i).or_insert((f2, f2));
            e.0 = e.0.min(f2);
            e.1 = e.1.max(f2);
        } else if f2 != 0.0 {
            recon = recon.max(f2.abs());
        }
    }
    let spread = per_annulus
        .values()
        .map(|(lo, hi)| hi - lo)
        .fold(0.0f64, f64::max);
    let ordered: Vec<(f64, f64)> = per_annulus.values().copied().collect();
    let monotone = ordered
        .windows(2)
        .map(|w| w[1].1 - w[0].0)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let pass = recon <= IDENTITY_TOL && spread == 0.0 && monotone == 0.0;
    Ok(AuxConsistencyReport {
        samples,
        reconstruction_error: recon,
        annulus_spread: spread,
        monotonicity_violation: monotone,
        annuli_hit: per_annulus.len(),
        tolerance: IDENTITY_TOL,
        pass,
        seed,
    })
}

/// A random quadratic on `R^n` with Hessian entries in `[-2, 2]`, linear
/// part in `[-1, 1]^n` and time slope in `[-1, 1]`, with its Hessian.
pub fn random_quadratic(rng: &mut ChaCha8Rng, n: usize) -> Result<(SmoothTestFunction, Vec<f64>)> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-2.0..2.0);
            h[i * n + j] = v;
            h[j * n + i] = v;
        }
    }
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = rng.gen_range(-1.0..1.0);
    let tau = rng.gen_range(-1.0..1.0);
    Ok((SmoothTestFunction::quadratic(h.clone(), b, c, tau)?, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSweep {
    pub alpha: f64,
    pub epsilon: f64,
    pub directions: Vec<usize>,
    pub quadratics: usize,
    /// Largest `|R|` per direction count.
    pub worst_residual: Vec<f64>,
    /// Largest `|R| - tol` per direction count.
    pub worst_excess: Vec<f64>,
    pub seed: u64,
}

/// Evaluates the expansion residual of `count` random quadratics, each at
/// a point of `[-1/2, 1/2]^n` where the gradient has length at least
/// `min_grad`, for each direction count in `direction_counts`.
#[allow(clippy::too_many_arguments)]
pub fn quadratic_sweep(
    alpha: f64,
    epsilon: f64,
    n: usize,
    direction_counts: &[usize],
    quad: &DiskQuadrature,
    count: usize,
    min_grad: f64,
    seed: u64,
) -> Result<QuadraticSweep> {
    let cyl = ParabolicCylinder::new(SpaceBox::centered(n, 1.0)?, 1.0, epsilon)?;
    let params = DppParams::new(alpha, cyl)?;
    let sets = direction_counts
        .iter()
        .map(|&k| direction_set(n, k))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = vec![0.0f64; sets.len()];
    let mut excess = vec![f64::NEG_INFINITY; sets.len()];
    let t = 0.2;
    let mut tested = 0;
    let mut attempts = 0;
    while tested < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Error::InvalidParameter(format!(
                "could not find quadratics with gradient >= {min_grad}"
            )));
        }
        let (phi, h) = random_quadratic(&mut rng, n)?;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        if norm(&phi.gradient(&x, t)) < min_grad {
            continue;
        }
        tested += 1;
        for (k, d) in sets.iter().enumerate() {
            let r = expansion_residual(&phi, &x, t, &params, d, quad)?.abs();
            let tol = quadratic_residual_tolerance(&params, &h, phi.value(&x, t), d);
            worst[k] = worst[k].max(r);
            excess[k] = excess[k].max(r - tol);
        }
    }
    Ok(QuadraticSweep {
        alpha,
        epsilon,
        directions: direction_counts.to_vec(),
        quadratics: count,
        worst_residual: worst,
        worst_excess: excess,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRate {
    pub epsilons: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log |R|` against `log eps`.
    pub rate: f64,
}

/// Expansion residual of the exponential heat profile at `(x, t)` for each
/// step length, with the fitted convergence rate.
#[allow(clippy::too_many_arguments)]
pub fn exp_heat_rate(
    alpha: f64,
    n: usize,
    k: f64,
    epsilons: &[f64],
    directions: usize,
    quad: &DiskQuadrature,
    x: &[f64],
    t: f64,
) -> Result<ResidualRate> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidParameter("a rate needs at least two epsilons".into()));
    }
    let phi = SmoothTestFunction::exp_heat(n, k, alpha)?;
    let dirs = direction_set(n, directions)?;
    let mut residuals = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let cyl = ParabolicCylinder::new(SpaceBox::centered(n, 1.0)?, 1.0, eps)?;
        let params = DppParams::new(alpha, cyl)?;
        residuals.push(expansion_residual(&phi, x, t, &params, &dirs, quad)?.abs());
    }
    let lx: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = residuals.iter().map(|r| r.max(f64::MIN_POSITIVE).ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(ResidualRate {
        epsilons: epsilons.to_vec(),
        residuals,
        rate: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::disk_quadrature;

    #[test]
    fn paired_rotation_holds_in_two_and_three_dimensions() {
        for n in [2, 3] {
            let r = paired_rotation_check(n, 200, 50, 3).unwrap();
            assert!(r.pass, "{r:?}");
            assert!(r.max_excess <= 1e-10);
        }
        assert!(paired_rotation_check(1, 1, 1, 0).is_err());
    }

    #[test]
    fn aux_structure_holds() {
        let aux = AuxiliaryFunctions {
            c: 2.0,
            m: 3.0,
            n_annuli: 5,
            delta: 0.5,
            epsilon: 0.1,
            r: 0.25,
            time_shift: 0.0,
            omega: None,
        };
        let r = aux_consistency_check(&aux, 2, 2000, 1).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.annuli_hit >= 5);
    }

    #[test]
    fn exp_heat_rate_is_fitted_on_log_scale() {
        let q = disk_quadrature(2, 2).unwrap();
        let r = exp_heat_rate(0.5, 2, 1.0, &[0.1, 0.05], 16, &q, &[0.0, 0.0], 0.0).unwrap();
        let direct = (r.residuals[0] / r.residuals[1]).ln() / 2f64.ln();
        assert!((r.rate - direct).abs() < 1e-12);
    }

    #[test]
    fn exp_heat_residual_matches_closed_form() {
        // the extremal directions are +-e1 and the disk average of a
        // function constant across e1^perp is exact, so the residual is
        // (exp(-alpha dt)(alpha cosh eps + beta) - 1) / dt, about
        // eps^2 (alpha/12 - alpha^2/4)
        let alpha = 0.5;
        let q = disk_quadrature(2, 2).unwrap();
        let eps = [0.1, 0.05, 0.025];
        let r = exp_heat_rate(alpha, 2, 1.0, &eps, 16, &q, &[0.0, 0.0], 0.0).unwrap();
        for (e, got) in eps.iter().zip(&r.residuals) {
            let dt = 0.5 * e * e;
            let exact = ((-alpha * dt).exp() * (alpha * e.cosh() + 1.0 - alpha) - 1.0) / dt;
            assert!((got - exact.abs()).abs() < 1e-9, "{e}: {got} vs {exact}");
            let leading = e * e * (alpha / 12.0 - alpha * alpha / 4.0).abs();
            assert!((got / leading - 1.0).abs() < 0.05);
        }
        assert!((r.rate - 2.0).abs() < 0.01);
    }

    #[test]
    fn sweep_reports_one_entry_per_direction_count() {
        let q = disk_quadrature(2, 2).unwrap();
        let s = quadratic_sweep(0.6, 1e-3, 2, &[16, 32], &q, 3, 0.5, 9).unwrap();
        assert_eq!(s.worst_residual.len(), 2);
        assert!(s.worst_excess.iter().all(|e| *e <= 0.0), "{s:?}");
    }
}
