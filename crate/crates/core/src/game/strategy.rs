use crate::dpp::{midrange_op, Field};
use crate::linalg::{norm, sub};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyMode {
    Max,
    Min,
}

/// Markov strategy: maps the current space-time point to a unit direction.
#[derive(Debug, Clone)]
pub enum Strategy<'f> {
    FixedDirection(Vec<f64>),
    PullToward(Vec<f64>),
    GreedyMax(&'f Field),
    GreedyMin(&'f Field),
}

/// A strategy's answer. `degenerate` marks a pull toward the current point,
/// where the direction is undefined and `e_1` is returned instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub direction: Vec<f64>,
    pub degenerate: bool,
}

impl<'f> Strategy<'f> {
    /// Normalizes `nu`; rejects the zero vector.
    pub fn fixed(nu: &[f64]) -> Result<Self> {
        let len = norm(nu);
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidParameter(
                "fixed direction must be a nonzero finite vector".into(),
            ));
        }
        Ok(Strategy::FixedDirection(nu.iter().map(|v| v / len).collect()))
    }

    pub fn pull_toward(target: &[f64]) -> Self {
        Strategy::PullToward(target.to_vec())
    }

    pub fn field(&self) -> Option<&'f Field> {
        match self {
            Strategy::GreedyMax(f) | Strategy::GreedyMin(f) => Some(f),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::FixedDirection(_) => "fixed_direction",
            Strategy::PullToward(_) => "pull_toward",
            Strategy::GreedyMax(_) => "greedy_max",
            Strategy::GreedyMin(_) => "greedy_min",
        }
    }

    pub fn choose(&self, x: &[f64], t: f64) -> Result<Choice> {
        let n = x.len();
        match self {
            Strategy::FixedDirection(nu) => {
                check_dim(nu.len(), n)?;
                Ok(Choice {
                    direction: nu.clone(),
                    degenerate: false,
                })
            }
            Strategy::PullToward(target) => {
                check_dim(target.len(), n)?;
                let d = sub(target, x);
                let len = norm(&d);
                if len > 0.0 {
                    Ok(Choice {
                        direction: d.iter().map(|v| v / len).collect(),
                        degenerate: false,
                    })
                } else {
                    let mut e1 = vec![0.0; n];
                    e1[0] = 1.0;
                    Ok(Choice {
                        direction: e1,
                        degenerate: true,
                    })
                }
            }
            Strategy::GreedyMax(field) => greedy(field, x, t, GreedyMode::Max),
            Strategy::GreedyMin(field) => greedy(field, x, t, GreedyMode::Min),
        }
    }
}

pub fn greedy_strategy(field: &Field, mode: GreedyMode) -> Strategy<'_> {
    match mode {
        GreedyMode::Max => Strategy::GreedyMax(field),
        GreedyMode::Min => Strategy::GreedyMin(field),
    }
}

fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Index `j` with `t = t_j`, or `OffLattice` if `t` is not a lattice time.
pub fn lattice_index(field: &Field, t: f64) -> Result<usize> {
    let dt = field.params.time_step();
    let r = (t / dt).round();
    if !(r >= 0.0) || (t - r * dt).abs() > 1e-9 * dt {
        return Err(Error::OffLattice(t));
    }
    let j = r as usize;
    if j > field.last_slice() {
        return Err(Error::SliceOutOfRange {
            index: j,
            max: field.last_slice(),
        });
    }
    Ok(j)
}

fn greedy(field: &Field, x: &[f64], t: f64, mode: GreedyMode) -> Result<Choice> {
    check_dim(field.params.dim(), x.len())?;
    let j = lattice_index(field, t)?;
    if j < 1 {
        return Err(Error::InvalidParameter(format!(
            "greedy strategy needs t >= t_1, got t = {t}"
        )));
    }
    let m = midrange_op(field, x, j - 1, &field.dirs, &field.quad)?;
    let i = match mode {
        GreedyMode::Max => m.argmax,
        GreedyMode::Min => m.argmin,
    };
    Ok(Choice {
        direction: field.dirs.get(i).to_vec(),
        degenerate: false,
    })
}
