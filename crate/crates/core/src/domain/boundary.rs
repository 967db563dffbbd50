use serde::{Deserialize, Serialize};

use super::Expr;
use crate::{Error, Result};

/// Boundary data `F`, evaluable at any space-time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryData {
    Constant { value: f64 },
    /// `a . x + c`
    Linear { a: Vec<f64>, c: f64 },
    /// `exp(alpha k^2 t + k x1)`, a classical solution of
    /// `u_t = alpha u_{x1 x1}`.
    ExpHeat { k: f64, alpha: f64 },
    /// `c + time_coeff * t + space_coeff * |x|^2`
    Quadratic {
        c: f64,
        time_coeff: f64,
        space_coeff: f64,
    },
    Expression { expr: Expr },
}

impl BoundaryData {
    pub fn expression(source: &str) -> Result<Self> {
        Ok(BoundaryData::Expression {
            expr: Expr::parse(source)?,
        })
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        Ok(match self {
            BoundaryData::Constant { value } => *value,
            BoundaryData::Linear { a, c } => {
                if a.len() != x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.len(),
                        got: x.len(),
                    });
                }
                a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + c
            }
            BoundaryData::ExpHeat { k, alpha } => (alpha * k * k * t + k * x[0]).exp(),
            BoundaryData::Quadratic {
                c,
                time_coeff,
                space_coeff,
            } => c + time_coeff * t + space_coeff * x.iter().map(|v| v * v).sum::<f64>(),
            BoundaryData::Expression { expr } => expr.eval(x, t)?,
        })
    }

    /// Checks that the data can be evaluated in dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            BoundaryData::Linear { a, .. } if a.len() != n => Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
            }),
            BoundaryData::Expression { expr } if expr.max_variable() > n => {
                Err(Error::InvalidParameter(format!(
                    "expression references x{} but the dimension is {n}",
                    expr.max_variable()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Equivalent source text in the expression language.
    pub fn to_expression_string(&self, n: usize) -> String {
        match self {
            BoundaryData::Constant { value } => format!("{value:?}"),
            BoundaryData::Linear { a, c } => {
                let mut s = String::new();
                for (i, ai) in a.iter().enumerate() {
                    s.push_str(&format!("({ai:?})*x{} + ", i + 1));
                }
                s.push_str(&format!("({c:?})"));
                s
            }
            BoundaryData::ExpHeat { k, alpha } => {
                format!("exp(({alpha:?})*({k:?})^2*t + ({k:?})*x1)")
            }
            BoundaryData::Quadratic {
                c,
                time_coeff,
                space_coeff,
            } => {
                let squares: Vec<String> = (1..=n).map(|i| format!("x{i}^2")).collect();
                format!(
                    "({c:?}) + ({time_coeff:?})*t + ({space_coeff:?})*({})",
                    squares.join(" + ")
                )
            }
            BoundaryData::Expression { expr } => expr.source().to_string(),
        }
    }
}
