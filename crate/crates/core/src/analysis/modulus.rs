use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::QRegion;
use crate::dpp::Field;
use crate::linalg::{norm, sub};
use crate::{Error, Result};

/// A space-time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTime {
    pub x: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub delta: f64,
    pub region: QRegion,
    pub epsilon: f64,
    /// `sup |u(x,t) - u(z,s)| / (|u|_inf (|x-z|^d + |t-s|^(d/2) + eps^d))`.
    pub constant: f64,
    pub argmax: Option<(SpaceTime, SpaceTime)>,
    pub random_pairs: usize,
    pub lattice_pairs: usize,
    pub sup_norm: f64,
    pub seed: u64,
}

struct Sample {
    x: Vec<f64>,
    t: f64,
    u: f64,
}

/// Empirical Hoelder (`delta < 1`) or Lipschitz (`delta = 1`) constant of a
/// solved field over a sub-cylinder, from `samples` seeded random pairs and
/// all pairs of a coarse node/slice sub-lattice.
pub fn empirical_modulus(
    field: &Field,
    delta: f64,
    region: &QRegion,
    samples: usize,
    seed: u64,
) -> Result<ModulusReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "modulus exponent must lie in (0, 1], got {delta}"
        )));
    }
    region.validate(&field.params)?;
    let slices: Vec<usize> = (0..field.values.len())
        .filter(|&j| region.in_window(field.time(j)))
        .collect();
    if slices.is_empty() {
        return Err(Error::InvalidParameter(
            "region window contains no time slice".into(),
        ));
    }
    let eps_d = field.params.epsilon.powf(delta);
    let quotient = |a: &Sample, b: &Sample| {
        let dx = norm(&sub(&a.x, &b.x));
        let dt = (a.t - b.t).abs();
        (a.u - b.u).abs() / (dx.powf(delta) + dt.powf(0.5 * delta) + eps_d)
    };
    let mut best = 0.0f64;
    let mut arg: Option<(SpaceTime, SpaceTime)> = None;
    let mut consider = |a: &Sample, b: &Sample| {
        let q = quotient(a, b);
        if q > best {
            best = q;
            arg = Some((
                SpaceTime {
                    x: a.x.clone(),
                    t: a.t,
                },
                SpaceTime {
                    x: b.x.clone(),
                    t: b.t,
                },
            ));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = field.params.dim();
    let draw = |rng: &mut ChaCha8Rng| -> Result<Sample> {
        let x = loop {
            let offset: Vec<f64> = (0..n)
                .map(|_| region.radius * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            if norm(&offset) <= region.radius {
                break offset
                    .iter()
                    .zip(&region.center)
                    .map(|(o, c)| o + c)
                    .collect::<Vec<_>>();
            }
        };
        let j = slices[rng.gen_range(0..slices.len())];
        let u = field.eval_state(&x, j)?;
        Ok(Sample {
            x,
            t: field.time(j),
            u,
        })
    };
    for _ in 0..samples {
        let a = draw(&mut rng)?;
        let b = draw(&mut rng)?;
        consider(&a, &b);
    }

    // coarse lattice: at most ~9 nodes across the ball, at most 6 slices
    let grid = &field.grid;
    let per_axis = (2.0 * region.radius / grid.spacing).floor() as usize + 1;
    let node_stride = per_axis.div_ceil(9).max(1);
    let slice_stride = slices.len().div_ceil(6).max(1);
    let mut lattice = Vec::new();
    for flat in region.nodes_within(grid, region.radius) {
        if grid.multi_index(flat).iter().any(|i| i % node_stride != 0) {
            continue;
        }
        for &j in slices.iter().rev().step_by(slice_stride) {
            lattice.push(Sample {
                x: grid.node(flat),
                t: field.time(j),
                u: field.values[j][flat],
            });
        }
    }
    let mut lattice_pairs = 0;
    for a in 0..lattice.len() {
        for b in a + 1..lattice.len() {
            consider(&lattice[a], &lattice[b]);
            lattice_pairs += 1;
        }
    }

    let sup_norm = field.max_abs();
    let constant = if sup_norm > 0.0 { best / sup_norm } else { 0.0 };
    Ok(ModulusReport {
        delta,
        region: region.clone(),
        epsilon: field.params.epsilon,
        constant,
        argmax: arg,
        random_pairs: samples,
        lattice_pairs,
        sup_norm,
        seed,
    })
}
