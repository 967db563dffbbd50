use midrange_core::domain::{make_grid, BoundaryData, ParabolicCylinder, SpaceBox};
use midrange_core::dpp::{
    averaging_op, direction_set, disk_quadrature, midrange_fn, midrange_op, read_field_csv,
    solve, DirectionSet, DiskQuadrature, DppParams, Field, Solver,
};
use midrange_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(
    n: usize,
    alpha: f64,
    eps: f64,
    horizon: f64,
    h: f64,
    k: usize,
) -> (DppParams, midrange_core::domain::SpatialGrid, DirectionSet, DiskQuadrature) {
    let space = SpaceBox::centered(n, 1.0).unwrap();
    let params =
        DppParams::new(alpha, ParabolicCylinder::new(space.clone(), horizon, eps).unwrap())
            .unwrap();
    let grid = make_grid(&space, h).unwrap();
    (
        params,
        grid,
        direction_set(n, k).unwrap(),
        disk_quadrature(n, 3).unwrap(),
    )
}

fn solve_with(f: &BoundaryData, n: usize, k: usize) -> Field {
    let (p, g, d, q) = setup(n, 0.4, 0.2, 0.1, 0.1, k);
    solve(&p, f, &g, &d, &q).unwrap()
}

#[test]
fn constant_data_is_preserved() {
    let f = BoundaryData::Constant { value: 2.5 };
    let field = solve_with(&f, 2, 16);
    assert_eq!(field.slice_times.len(), 6);
    for slice in &field.values {
        assert!(slice.iter().all(|v| (v - 2.5).abs() <= 1e-12));
    }
}

#[test]
fn linear_data_is_preserved() {
    let f = BoundaryData::Linear {
        a: vec![0.7, -0.3],
        c: 0.25,
    };
    let field = solve_with(&f, 2, 12);
    let mut worst = 0.0f64;
    for slice in &field.values {
        for (flat, v) in slice.iter().enumerate() {
            let exact = f.eval(&field.grid.node(flat), 0.0).unwrap();
            worst = worst.max((v - exact).abs());
        }
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn linear_data_is_preserved_3d() {
    let f = BoundaryData::Linear {
        a: vec![0.2, 0.5, -1.0],
        c: 0.0,
    };
    let (p, g, d, q) = setup(3, 0.5, 0.25, 0.07, 0.125, 20);
    let field = solve(&p, &f, &g, &d, &q).unwrap();
    for slice in &field.values {
        for (flat, v) in slice.iter().enumerate() {
            let exact = f.eval(&field.grid.node(flat), 0.0).unwrap();
            assert!((v - exact).abs() <= 1e-10);
        }
    }
}

#[test]
fn eval_state_examples() {
    let f = BoundaryData::Constant { value: 5.0 };
    let field = solve_with(&f, 2, 8);
    // lateral strip
    assert_eq!(field.eval_state(&[1.1, 0.0], 3).unwrap(), 5.0);
    assert!(matches!(
        field.eval_state(&[1.5, 0.0], 3),
        Err(Error::OutOfDomain { .. })
    ));
    assert!(matches!(
        field.eval_state(&[0.0, 0.0], 99),
        Err(Error::SliceOutOfRange { .. })
    ));

    let f = BoundaryData::expression("x1^2 + sin(3*x2) + t").unwrap();
    let field = solve_with(&f, 2, 8);
    let j = 2;
    let g = &field.grid;
    let a = g.flat_index(&[8, 11]);
    let b = g.flat_index(&[8, 12]);
    assert_eq!(field.eval_state(&g.node(a), j).unwrap(), field.values[j][a]);
    let mid = [g.coord(0, 8), 0.5 * (g.coord(1, 11) + g.coord(1, 12))];
    let v = field.eval_state(&mid, j).unwrap();
    assert!((v - 0.5 * (field.values[j][a] + field.values[j][b])).abs() < 1e-15);
}

/// `u(y) = a.y` on an exactly representable field: the noise average
/// cancels and the pull term contributes `eps alpha a.nu`.
#[test]
fn averaging_on_linear_field() {
    let a = [0.6, -0.8];
    let f = BoundaryData::Linear { a: a.to_vec(), c: 0.0 };
    let (p, g, d, q) = setup(2, 0.3, 0.2, 0.1, 0.1, 16);
    let field = solve(&p, &f, &g, &d, &q).unwrap();
    let x = [0.13, -0.27];
    for i in 0..d.len() {
        let nu = d.get(i);
        let got = averaging_op(&field, &x, nu, 3, &q).unwrap();
        let want = a[0] * x[0] + a[1] * x[1] + 0.2 * 0.3 * (a[0] * nu[0] + a[1] * nu[1]);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    let m = midrange_op(&field, &x, 3, &d, &q).unwrap();
    assert!((m.value - (a[0] * x[0] + a[1] * x[1])).abs() < 1e-12);
    assert_eq!(d.antipode(m.argmax), m.argmin);
}

#[test]
fn midrange_on_constant_field_and_tie_break() {
    let f = BoundaryData::Constant { value: -1.0 };
    let (p, g, d, q) = setup(2, 0.3, 0.2, 0.1, 0.1, 16);
    let field = solve(&p, &f, &g, &d, &q).unwrap();
    let m = midrange_op(&field, &[0.1, 0.1], 2, &d, &q).unwrap();
    assert!((m.value + 1.0).abs() < 1e-14);
    // exact ties resolve to the lowest index
    let m = midrange_fn(0.3, 0.2, &[0.1, 0.1], &d, &q, |_| Ok(-1.0)).unwrap();
    assert_eq!((m.argmax, m.argmin), (0, 0));
}

/// `u(y) = |y|^2`: closed form `alpha eps^2 + beta eps^2 (n-1)/(n+1)` at the
/// origin and `alpha(|x|^2+eps^2) + beta(|x|^2 + eps^2 (n-1)/(n+1))`
/// elsewhere; a dense direction sweep agrees.
#[test]
fn quadratic_midrange_identity() {
    let sq = |y: &[f64]| -> midrange_core::Result<f64> { Ok(y.iter().map(|v| v * v).sum()) };
    for n in [2usize, 3] {
        let (alpha, eps) = (0.35, 0.1);
        let beta = 1.0 - alpha;
        let q = disk_quadrature(n, 4).unwrap();
        let d = direction_set(n, 64).unwrap();
        let ratio = (n as f64 - 1.0) / (n as f64 + 1.0);
        let want0 = alpha * eps * eps + beta * eps * eps * ratio;
        let got = midrange_fn(alpha, eps, &vec![0.0; n], &d, &q, sq).unwrap();
        assert!((got.value - want0).abs() < 1e-10);
        for i in 0..d.len() {
            let a = midrange_core::dpp::averaging_fn(alpha, eps, &vec![0.0; n], d.frame(i), &q, sq)
                .unwrap();
            assert!(a <= eps * eps + 1e-15);
        }
        // x != 0; the set contains +-x/|x| because x is one of its directions
        let x: Vec<f64> = d.get(5).iter().map(|v| 0.4 * v).collect();
        let want = alpha * (0.16 + eps * eps) + beta * (0.16 + eps * eps * ratio);
        let got = midrange_fn(alpha, eps, &x, &d, &q, sq).unwrap();
        assert!((got.value - want).abs() < 1e-12);
    }
    // brute force sweep of 10^4 directions in the plane
    let half: Vec<Vec<f64>> = (0..5000)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / 5000.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let dense = DirectionSet::from_half(half).unwrap();
    let q = disk_quadrature(2, 2).unwrap();
    let got = midrange_fn(0.5, 0.1, &[0.3, -0.2], &dense, &q, sq).unwrap();
    let want = 0.5 * (0.13 + 0.01) + 0.5 * (0.13 + 0.01 / 3.0);
    assert!((got.value - want).abs() < 1e-12);
}

#[test]
fn horizon_rounds_up_to_lattice() {
    let f = BoundaryData::Constant { value: 0.0 };
    let (p, g, d, q) = setup(2, 0.5, 0.2, 0.05, 0.25, 8);
    let field = solve(&p, &f, &g, &d, &q).unwrap();
    // eps^2/2 = 0.02: slices at 0, 0.02, 0.04, 0.06
    assert_eq!(field.values.len(), 4);
    assert!((field.params.cylinder.horizon - 0.06).abs() < 1e-15);
    assert_eq!(field.requested_horizon, 0.05);
}

#[test]
fn inconsistent_inputs_rejected() {
    let f = BoundaryData::Constant { value: 0.0 };
    let (p, _, d, q) = setup(2, 0.5, 0.2, 0.05, 0.25, 8);
    let other = make_grid(&SpaceBox::centered(2, 2.0).unwrap(), 0.25).unwrap();
    assert!(solve(&p, &f, &other, &d, &q).is_err());
    let (_, g, _, _) = setup(2, 0.5, 0.2, 0.05, 0.25, 8);
    let d3 = direction_set(3, 8).unwrap();
    assert!(matches!(
        solve(&p, &f, &g, &d3, &q),
        Err(Error::DimensionMismatch { .. })
    ));
    let bad = BoundaryData::expression("1/(x1 - x1)").unwrap();
    assert!(matches!(
        solve(&p, &bad, &g, &d, &q),
        Err(Error::NonFinite { slice: 0, .. })
    ));
}

fn random_data(rng: &mut ChaCha8Rng) -> BoundaryData {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
    BoundaryData::expression(&format!(
        "{} * sin({} * x1 + {} * x2) + {} * x1 * x2 + {} * cos({} * t)",
        c[0],
        c[1] * 3.0,
        c[2] * 3.0,
        c[3],
        c[4],
        c[5] * 20.0
    ))
    .unwrap()
}

#[test]
fn discrete_maximum_principle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (p, g, d, q) = setup(2, 0.5, 0.2, 0.12, 0.1, 16);
    for _ in 0..5 {
        let f = random_data(&mut rng);
        let field = solve(&p, &f, &g, &d, &q).unwrap();
        let (lo, hi) = field.value_range();
        assert!(lo >= field.boundary_range.0 && hi <= field.boundary_range.1);
    }
}

#[test]
fn monotone_in_boundary_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (p, g, d, q) = setup(2, 0.6, 0.2, 0.12, 0.1, 16);
    for _ in 0..3 {
        let f1 = random_data(&mut rng);
        let bump = format!("({}) + 0.3 * max(0, 0.5 - abs(x1 - 0.9))", f1.to_expression_string(2));
        let f2 = BoundaryData::expression(&bump).unwrap();
        let u1 = solve(&p, &f1, &g, &d, &q).unwrap();
        let u2 = solve(&p, &f2, &g, &d, &q).unwrap();
        for (a, b) in u1.values.iter().flatten().zip(u2.values.iter().flatten()) {
            assert!(a <= b);
        }
    }
}

#[test]
fn constant_shift_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (p, g, d, q) = setup(2, 0.5, 0.2, 0.12, 0.1, 16);
    let f = random_data(&mut rng);
    let shifted = BoundaryData::expression(&format!("{} + 1.75", f.to_expression_string(2))).unwrap();
    let u = solve(&p, &f, &g, &d, &q).unwrap();
    let v = solve(&p, &shifted, &g, &d, &q).unwrap();
    for (a, b) in u.values.iter().flatten().zip(v.values.iter().flatten()) {
        assert!((a + 1.75 - b).abs() <= 1e-10);
    }
}

#[test]
fn reflection_and_permutation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (p, g, d, q) = setup(2, 0.5, 0.2, 0.12, 0.1, 16);
    let f = random_data(&mut rng);
    let src = f.to_expression_string(2);
    let reflected = BoundaryData::expression(&src.replace("x1", "(-x1)")).unwrap();
    let swapped = BoundaryData::expression(
        &src.replace("x1", "X").replace("x2", "x1").replace('X', "x2"),
    )
    .unwrap();
    let u = solve(&p, &f, &g, &d, &q).unwrap();
    let ur = solve(&p, &reflected, &g, &d, &q).unwrap();
    let us = solve(&p, &swapped, &g, &d, &q).unwrap();
    let last = g.nodes_per_axis - 1;
    for j in 0..u.values.len() {
        for flat in 0..g.node_count() {
            let idx = g.multi_index(flat);
            let r = g.flat_index(&[last - idx[0], idx[1]]);
            let s = g.flat_index(&[idx[1], idx[0]]);
            assert!((u.values[j][flat] - ur.values[j][r]).abs() <= 1e-10);
            assert!((u.values[j][flat] - us.values[j][s]).abs() <= 1e-10);
        }
    }
}

#[test]
fn csv_round_trip() {
    let f = BoundaryData::expression("exp(0.3*t + x1) * cos(x2)").unwrap();
    let (p, g, d, q) = setup(2, 0.5, 0.2, 0.06, 0.25, 8);
    let field = solve(&p, &f, &g, &d, &q).unwrap();
    let mut buf = Vec::new();
    field.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("j,t,i1,i2,x1,x2,value\n"));
    let back = read_field_csv(std::io::Cursor::new(buf), &g).unwrap();
    assert_eq!(back.len(), field.values.len());
    for (j, (t, vals)) in back.iter().enumerate() {
        assert_eq!(*t, field.slice_times[j]);
        for (a, b) in vals.iter().zip(&field.values[j]) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }
    let side = serde_json::to_string(&field.sidecar()).unwrap();
    let parsed: midrange_core::dpp::FieldSidecar = serde_json::from_str(&side).unwrap();
    assert_eq!(parsed, field.sidecar());
    assert_eq!(parsed.directions, 8);
    assert_eq!(parsed.quadrature_order, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    /// Parallel and sequential sweeps agree bit for bit.
    #[test]
    fn thread_count_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_data(&mut rng);
        let (p, g, d, q) = setup(2, 0.5, 0.2, 0.06, 0.1, 8);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| solve(&p, &f, &g, &d, &q).unwrap());
        let b = four.install(|| solve(&p, &f, &g, &d, &q).unwrap());
        prop_assert_eq!(a.values, b.values);
        prop_assert_eq!(a.boundary_range, b.boundary_range);
    }
}

/// The row-sweep stencil path and point evaluation through `eval_state`
/// compute the same recursion.
#[test]
fn stencil_matches_point_evaluation() {
    let f = BoundaryData::expression("sin(2*x1) * exp(x2) + t").unwrap();
    let (p, g, d, q) = setup(2, 0.45, 0.2, 0.1, 0.05, 12);
    let field = solve(&p, &f, &g, &d, &q).unwrap();
    for j in 1..field.values.len() {
        for flat in (0..g.node_count()).step_by(7) {
            let x = g.node(flat);
            if !g.space.contains_open(&x) {
                continue;
            }
            let m = midrange_op(&field, &x, j - 1, &d, &q).unwrap();
            assert!((m.value - field.values[j][flat]).abs() < 1e-12);
        }
    }
}

#[test]
fn windowed_solve_keeps_matching_slices() {
    let f = BoundaryData::ExpHeat { k: 1.0, alpha: 0.4 };
    let (p, g, d, q) = setup(2, 0.4, 0.2, 0.1, 0.1, 8);
    let solver = Solver::new(&p, &f, &g, &d, &q).unwrap();
    let full = solver.solve().unwrap();
    let window = solver.solve_window(|t| t > 0.05).unwrap();
    let first = full.slice_times.iter().position(|&t| t > 0.05).unwrap();
    assert_eq!(window.slice_times, full.slice_times[first..].to_vec());
    assert_eq!(window.values, full.values[first..].to_vec());
    assert_eq!(window.boundary_range, full.boundary_range);
    assert!(solver.solve_window(|_| false).is_err());

    let streamed = solver.sidecar(full.boundary_range);
    assert_eq!(streamed, full.sidecar());
}
