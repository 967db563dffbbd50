use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Strategy;
use crate::domain::{classify, BoundaryData, PointClass};
use crate::dpp::{orthonormal_frame, DppParams};
use crate::{Error, Result};

/// Trajectory `r` of seed `s` uses `ChaCha8Rng::seed_from_u64(s)` moved to
/// stream `r`. Per round the draws are: coin, branch, then noise (noise
/// branch only).
pub const SUBSTREAM_SCHEME: &str = "chacha8-stream-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub params: DppParams,
    pub boundary: BoundaryData,
    pub start_x: Vec<f64>,
    pub start_t: f64,
    pub rng_seed: u64,
}

impl GameConfig {
    pub fn new(
        params: DppParams,
        boundary: BoundaryData,
        start_x: Vec<f64>,
        start_t: f64,
        rng_seed: u64,
    ) -> Result<Self> {
        let cfg = GameConfig {
            params,
            boundary,
            start_x,
            start_t,
            rng_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.boundary.validate(self.params.dim())?;
        match classify(&self.start_x, self.start_t, &self.params.cylinder)? {
            PointClass::Interior => Ok(()),
            other => Err(Error::InvalidParameter(format!(
                "game start ({:?}, {}) is {:?}, not interior",
                self.start_x, self.start_t, other
            ))),
        }
    }

    /// `ceil(2 t0 / eps^2) + 1`.
    pub fn step_bound(&self) -> usize {
        (self.start_t / self.params.time_step() - 1e-9).ceil() as usize + 1
    }

    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(trial);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub x: Vec<f64>,
    pub t: f64,
    pub winner: Player,
    /// True when the deterministic `x + eps nu` branch was taken.
    pub pulled: bool,
    pub degenerate: bool,
}

/// One round of the game from an interior point.
pub fn step<R: Rng + ?Sized>(
    params: &DppParams,
    x: &[f64],
    t: f64,
    s_one: &Strategy<'_>,
    s_two: &Strategy<'_>,
    rng: &mut R,
) -> Result<Round> {
    let n = params.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if n != 2 && n != 3 {
        return Err(Error::Unsupported(format!("game in dimension {n}")));
    }
    let winner = if rng.gen::<f64>() < 0.5 {
        Player::One
    } else {
        Player::Two
    };
    let choice = match winner {
        Player::One => s_one.choose(x, t)?,
        Player::Two => s_two.choose(x, t)?,
    };
    let eps = params.epsilon;
    let pulled = rng.gen::<f64>() < params.alpha;
    let next: Vec<f64> = if pulled {
        x.iter()
            .zip(&choice.direction)
            .map(|(xi, vi)| xi + eps * vi)
            .collect()
    } else {
        let mut h = vec![0.0; n];
        if n == 2 {
            h[1] = 2.0 * rng.gen::<f64>() - 1.0;
        } else {
            let r = rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            h[1] = r * theta.cos();
            h[2] = r * theta.sin();
        }
        let ph = orthonormal_frame(&choice.direction)?.apply(&h);
        x.iter().zip(&ph).map(|(xi, pi)| xi + eps * pi).collect()
    };
    Ok(Round {
        x: next,
        t: t - params.time_step(),
        winner,
        pulled,
        degenerate: choice.degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub trial: u64,
    pub steps: usize,
    pub stop_x: Vec<f64>,
    pub stop_t: f64,
    pub payoff: f64,
    /// Rounds in which a strategy had no well-defined direction.
    pub degenerate_choices: usize,
}

/// Plays one trajectory until it enters the parabolic strip.
pub fn play<R: Rng + ?Sized>(
    config: &GameConfig,
    trial: u64,
    s_one: &Strategy<'_>,
    s_two: &Strategy<'_>,
    rng: &mut R,
) -> Result<GameOutcome> {
    let params = &config.params;
    let dt = params.time_step();
    let bound = config.step_bound();
    let mut x = config.start_x.clone();
    let mut t = config.start_t;
    let mut steps = 0;
    let mut degenerate = 0;
    loop {
        match classify(&x, t, &params.cylinder)? {
            PointClass::Interior => {}
            PointClass::ParabolicStrip => break,
            PointClass::Outside => return Err(Error::OutOfDomain { point: x }),
        }
        assert!(steps < bound, "game exceeded its termination bound");
        let round = step(params, &x, t, s_one, s_two, rng)?;
        steps += 1;
        degenerate += round.degenerate as usize;
        x = round.x;
        // recompute from the start so the clock never drifts off the lattice
        t = config.start_t - steps as f64 * dt;
    }
    let payoff = config.boundary.eval(&x, t)?;
    Ok(GameOutcome {
        trial,
        steps,
        stop_x: x,
        stop_t: t,
        payoff,
        degenerate_choices: degenerate,
    })
}

fn check_strategy(config: &GameConfig, s: &Strategy<'_>) -> Result<()> {
    if let Some(field) = s.field() {
        let p = &field.params;
        let q = &config.params;
        if p.alpha != q.alpha || p.epsilon != q.epsilon || p.cylinder.space != q.cylinder.space {
            return Err(Error::InvalidParameter(
                "greedy strategy field was solved with different parameters".into(),
            ));
        }
    }
    Ok(())
}

/// Runs `trials` independent trajectories in parallel. The result is in
/// trial order and does not depend on the thread count.
pub fn simulate(
    config: &GameConfig,
    s_one: &Strategy<'_>,
    s_two: &Strategy<'_>,
    trials: usize,
) -> Result<Vec<GameOutcome>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    config.validate()?;
    check_strategy(config, s_one)?;
    check_strategy(config, s_two)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|r| play(config, r, s_one, s_two, &mut config.rng(r)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
    pub substream_scheme: String,
    /// Set when `trials == 1`; the standard error is then reported as 0.
    pub single_trial: bool,
    pub degenerate_choices: usize,
    pub max_steps: usize,
}

pub fn summarize(outcomes: &[GameOutcome], seed: u64) -> Result<ValueEstimate> {
    let n = outcomes.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no outcomes to summarize".into()));
    }
    let mean = outcomes.iter().map(|o| o.payoff).sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let ss: f64 = outcomes.iter().map(|o| (o.payoff - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    Ok(ValueEstimate {
        mean,
        std_error,
        trials: n,
        seed,
        substream_scheme: SUBSTREAM_SCHEME.to_string(),
        single_trial: n == 1,
        degenerate_choices: outcomes.iter().map(|o| o.degenerate_choices).sum(),
        max_steps: outcomes.iter().map(|o| o.steps).max().unwrap_or(0),
    })
}

pub fn estimate_value(
    config: &GameConfig,
    s_one: &Strategy<'_>,
    s_two: &Strategy<'_>,
    trials: usize,
) -> Result<ValueEstimate> {
    summarize(&simulate(config, s_one, s_two, trials)?, config.rng_seed)
}

/// CSV with header `trial,steps,stop_t,stop_x1..xn,payoff`.
pub fn write_outcomes_csv<W: Write>(mut out: W, outcomes: &[GameOutcome]) -> Result<()> {
    let n = outcomes.first().map_or(0, |o| o.stop_x.len());
    write!(out, "trial,steps,stop_t")?;
    for k in 1..=n {
        write!(out, ",stop_x{k}")?;
    }
    writeln!(out, ",payoff")?;
    for o in outcomes {
        write!(out, "{},{},{}", o.trial, o.steps, o.stop_t)?;
        for v in &o.stop_x {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{}", o.payoff)?;
    }
    out.flush()?;
    Ok(())
}
