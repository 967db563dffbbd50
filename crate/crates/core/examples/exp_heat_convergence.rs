//! Sup error of the discrete solution against `exp(alpha t + x1)` for a
//! sequence of step lengths with `h = eps^2 / 2`.

use std::time::Instant;

use midrange_core::domain::{make_grid, BoundaryData, ParabolicCylinder, SpaceBox};
use midrange_core::dpp::{direction_set, disk_quadrature, DppParams, Solver};

fn main() -> midrange_core::Result<()> {
    let alpha = 0.5;
    let f = BoundaryData::ExpHeat { k: 1.0, alpha };
    let mut prev: Option<f64> = None;
    let eps_list: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("epsilon"))
        .collect();
    let eps_list = if eps_list.is_empty() { vec![0.1, 0.05] } else { eps_list };
    for eps in eps_list {
        let started = Instant::now();
        let space = SpaceBox::centered(2, 1.0)?;
        let params = DppParams::new(alpha, ParabolicCylinder::new(space.clone(), 0.05, eps)?)?;
        let grid = make_grid(&space, eps * eps / 2.0)?;
        let solver = Solver::new(
            &params,
            &f,
            &grid,
            &direction_set(2, 64)?,
            &disk_quadrature(2, 2)?,
        )?;
        let mut err = 0.0f64;
        solver.march(&mut |_j: usize, t: f64, v: &[f64]| {
            for (flat, value) in v.iter().enumerate() {
                let x = grid.node(flat);
                err = err.max((value - f.eval(&x, t)?).abs());
            }
            Ok(())
        })?;
        let ratio = prev.map(|p| p / err);
        println!(
            "eps={eps} nodes={} err={err:.3e} ratio={ratio:?} secs={:.1}",
            grid.node_count(),
            started.elapsed().as_secs_f64()
        );
        prev = Some(err);
    }
    Ok(())
}
