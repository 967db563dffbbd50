use midrange_core::domain::{classify, make_grid, BoundaryData, ParabolicCylinder, PointClass, SpaceBox};
use midrange_core::dpp::{direction_set, disk_quadrature, solve, DppParams, Field};
use midrange_core::game::{
    estimate_value, greedy_strategy, simulate, GameConfig, GreedyMode, Strategy,
};
use proptest::prelude::*;

fn params(eps: f64, horizon: f64) -> DppParams {
    let cyl = ParabolicCylinder::new(SpaceBox::centered(2, 1.0).unwrap(), horizon, eps).unwrap();
    DppParams::new(0.5, cyl).unwrap()
}

fn field(f: &BoundaryData, eps: f64, horizon: f64) -> Field {
    let p = params(eps, horizon);
    let g = make_grid(&p.cylinder.space, 0.05).unwrap();
    solve(&p, f, &g, &direction_set(2, 16).unwrap(), &disk_quadrature(2, 3).unwrap()).unwrap()
}

#[test]
fn greedy_play_agrees_with_solver_on_linear_data() {
    let f = BoundaryData::Linear {
        a: vec![1.0, -0.5],
        c: 0.2,
    };
    let u = field(&f, 0.2, 0.2);
    let j0 = u.last_slice();
    let x0 = vec![0.3, 0.1];
    let cfg = GameConfig::new(u.params.clone(), f, x0.clone(), u.time(j0), 17).unwrap();
    let max = greedy_strategy(&u, GreedyMode::Max);
    let min = greedy_strategy(&u, GreedyMode::Min);
    let est = estimate_value(&cfg, &max, &min, 10_000).unwrap();
    let target = u.eval_state(&x0, j0).unwrap();
    assert!((est.mean - target).abs() <= 3.0 * est.std_error, "{est:?} vs {target}");
    assert!(est.max_steps <= cfg.step_bound());
}

#[test]
fn outcomes_respect_strip_and_payoff_bounds() {
    let f = BoundaryData::expression("sin(3*x1) * x2 + t").unwrap();
    let u = field(&f, 0.2, 0.2);
    let cfg = GameConfig::new(u.params.clone(), f, vec![-0.4, 0.6], u.time(u.last_slice()), 3)
        .unwrap();
    let s1 = greedy_strategy(&u, GreedyMode::Max);
    let s2 = Strategy::pull_toward(&[1.5, 0.0]);
    let out = simulate(&cfg, &s1, &s2, 2000).unwrap();
    for o in &out {
        assert_eq!(
            classify(&o.stop_x, o.stop_t, &u.params.cylinder).unwrap(),
            PointClass::ParabolicStrip
        );
        assert!(o.steps <= cfg.step_bound());
        // |sin(3 x1) x2| <= 1 + eps on the strip and 0 < t <= 0.2
        assert!(o.payoff.abs() <= 1.2 + 0.2 + 1e-12);
    }
}

#[test]
fn greedy_rejects_mismatched_field() {
    let f = BoundaryData::Constant { value: 1.0 };
    let u = field(&f, 0.2, 0.2);
    let cfg = GameConfig::new(params(0.1, 0.2), f, vec![0.0, 0.0], 0.1, 0).unwrap();
    let s = greedy_strategy(&u, GreedyMode::Max);
    assert!(simulate(&cfg, &s, &s, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    /// Same seed gives the same outcome list at any thread count.
    #[test]
    fn reproducible_across_thread_counts(seed in any::<u64>()) {
        let f = BoundaryData::expression("x1^2 - x2 + 0.5*t").unwrap();
        let p = params(0.1, 0.3);
        let cfg = GameConfig::new(p, f, vec![0.2, -0.3], 0.25, seed).unwrap();
        let a = Strategy::fixed(&[1.0, 1.0]).unwrap();
        let b = Strategy::pull_toward(&[0.0, 0.0]);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let x = one.install(|| simulate(&cfg, &a, &b, 300).unwrap());
        let y = many.install(|| simulate(&cfg, &a, &b, 300).unwrap());
        prop_assert_eq!(x, y);
    }
}
