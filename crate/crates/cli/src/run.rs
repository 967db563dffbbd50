//! Command pipelines. Each pipeline returns its check records and a
//! details object; [`execute`] wraps them into a [`Report`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use midrange_core::analysis::{
    aux_consistency_check, barrier_check, effective_coefficients, empirical_modulus,
    exp_heat_rate, omega_check, paired_rotation_check, quadratic_sweep, time_osc_check,
    BarrierKind, CheckRecord, OmegaParams, QRegion, TimeOscAccumulator, TimeOscReport,
};
use midrange_core::domain::make_grid;
use midrange_core::dpp::{direction_set, disk_quadrature, FieldCsvWriter, Solver};
use midrange_core::game::{
    greedy_strategy, lattice_index, simulate, summarize, write_outcomes_csv, GameConfig,
    GreedyMode,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, ParsedConfig, Provenance, RunConfig};
use crate::report::{Report, Timing, REPORT_VERSION};
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";

/// Files created by a run. Unless committed, they are deleted on drop, as
/// is the output directory when the run created it.
struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
    created_dir: bool,
    committed: bool,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            names: Vec::new(),
            created_dir,
            committed: false,
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let file = File::create(self.dir.join(name))?;
        self.names.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn commit(&mut self) {
        self.committed = true;
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for name in &self.names {
            let _ = fs::remove_file(self.dir.join(name));
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

struct Output {
    checks: Vec<CheckRecord>,
    details: Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub report_path: PathBuf,
}

impl RunOutcome {
    /// Process exit status: 0 when every check passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            2
        }
    }
}

/// Applies `--seed` and `--out` and marks them in the provenance.
pub fn apply_overrides(
    parsed: &mut ParsedConfig,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    if let Some(s) = seed {
        parsed.config.seed = s;
        parsed
            .provenance
            .insert("seed".into(), Provenance::CommandLine);
    }
    if let Some(o) = out {
        parsed.config.out = o;
        parsed.provenance.insert("out".into(), Provenance::CommandLine);
    }
    parsed.config.validate()
}

/// Runs the configured command on a pool of `threads` workers (0 picks the
/// number of cores) and writes its artifacts and report.
pub fn execute(parsed: &ParsedConfig, threads: usize) -> Result<RunOutcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let used = pool.current_num_threads();
    pool.install(|| run_in_pool(parsed, used))
}

fn run_in_pool(parsed: &ParsedConfig, threads: usize) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let cfg = &parsed.config;
    let mut art = Artifacts::new(&cfg.out)?;
    let out = match cfg.command {
        Command::Solve => run_solve(cfg, &mut art)?,
        Command::Simulate => run_simulate(cfg, &mut art)?,
        Command::VerifyExpansion => run_expansion(cfg)?,
        Command::VerifyRegularity => run_regularity(cfg)?,
        Command::VerifyBarrier => run_barrier(cfg)?,
        Command::VerifyAux => run_aux(cfg)?,
    };
    let report = Report {
        version: REPORT_VERSION.to_string(),
        command: cfg.command.name().to_string(),
        config: cfg.clone(),
        provenance: parsed.provenance.clone(),
        pass: out.checks.iter().all(|c| c.pass),
        checks: out.checks,
        details: out.details,
        artifacts: art.names.clone(),
        timing: Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
            threads,
        },
    };
    let mut w = art.create(REPORT_FILE)?;
    w.write_all(report.to_json()?.as_bytes())?;
    w.flush()?;
    art.commit();
    Ok(RunOutcome {
        report,
        report_path: cfg.out.join(REPORT_FILE),
    })
}

fn osc_record(rep: &TimeOscReport, epsilon: f64) -> CheckRecord {
    CheckRecord::upper(
        "time_oscillation",
        json!({
            "epsilon": epsilon,
            "center": rep.region.center,
            "radius": rep.region.radius,
            "top": rep.region.top,
            "slices": rep.slices,
        }),
        rep.lhs,
        rep.rhs,
        rep.tolerance,
        "time variation at fixed x bounded by 18 times the oscillation over B_(r+eps) on one slice",
    )
}

fn run_solve(cfg: &RunConfig, art: &mut Artifacts) -> Result<Output, CliError> {
    let f = cfg.boundary()?;
    let pb = cfg.problem_at(cfg.epsilon)?;
    let solver = Solver::new(&pb.params, f, &pb.grid, &pb.dirs, &pb.quad)?;
    let params = solver.params().clone();
    let grid = solver.grid();
    let spec = &cfg.solve;

    let mut writer = if spec.write_field {
        Some(FieldCsvWriter::new(art.create("field.csv")?, grid)?)
    } else {
        None
    };
    let region = QRegion::largest(&params, spec.osc_radius_cap);
    let mut osc = if spec.time_osc {
        Some(TimeOscAccumulator::new(grid, &params, &region)?)
    } else {
        None
    };
    let nodes: Vec<Vec<f64>> = if spec.compare_exact {
        (0..grid.node_count()).map(|k| grid.node(k)).collect()
    } else {
        Vec::new()
    };
    let mut u_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut exact_error = 0.0f64;
    let range = solver.march(&mut |j: usize, t: f64, v: &[f64]| -> midrange_core::Result<()> {
        if let Some(w) = writer.as_mut() {
            w.write_slice(j, t, v)?;
        }
        if let Some(a) = osc.as_mut() {
            a.feed(t, v);
        }
        for &u in v {
            u_range = (u_range.0.min(u), u_range.1.max(u));
        }
        if !nodes.is_empty() {
            let e = nodes
                .par_iter()
                .zip(v.par_iter())
                .map(|(x, &u)| f.eval(x, t).map(|fx| (u - fx).abs()))
                .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
            exact_error = exact_error.max(e);
        }
        Ok(())
    })?;
    if let Some(w) = writer {
        w.finish()?;
        let sidecar = solver.sidecar(range);
        let mut s = art.create("field.json")?;
        serde_json::to_writer_pretty(&mut s, &sidecar)?;
        s.write_all(b"\n")?;
        s.flush()?;
    }

    let mut checks = Vec::new();
    let scale = 1.0 + range.0.abs().max(range.1.abs());
    let violation = (u_range.1 - range.1).max(range.0 - u_range.0);
    checks.push(CheckRecord::upper(
        "maximum_principle",
        json!({ "boundary_min": range.0, "boundary_max": range.1 }),
        violation,
        0.0,
        1e-12 * scale,
        "solution stays within the range of the boundary data",
    ));
    if spec.compare_exact {
        checks.push(CheckRecord::upper(
            "exact_error",
            json!({ "epsilon": params.epsilon, "h": grid.spacing }),
            exact_error,
            0.0,
            spec.exact_tolerance,
            "sup distance between the discrete solution and F taken as the exact solution",
        ));
    }
    let osc_report = match osc {
        Some(a) => {
            let rep = a.finish()?;
            checks.push(osc_record(&rep, params.epsilon));
            Some(rep)
        }
        None => None,
    };
    Ok(Output {
        checks,
        details: json!({
            "field": solver.sidecar(range),
            "coefficients": effective_coefficients(params.alpha, params.dim()),
            "solution_range": [u_range.0, u_range.1],
            "exact_error": spec.compare_exact.then_some(exact_error),
            "time_oscillation": osc_report,
        }),
    })
}

fn run_simulate(cfg: &RunConfig, art: &mut Artifacts) -> Result<Output, CliError> {
    let f = cfg.boundary()?;
    let spec = &cfg.simulate;
    let pb = cfg.problem_at(cfg.epsilon)?;
    let field = Solver::new(&pb.params, f, &pb.grid, &pb.dirs, &pb.quad)?.solve()?;
    let start_x = spec.start_x.clone().unwrap_or_default();
    let start_t = spec.start_t.unwrap_or(0.0);
    let game = GameConfig::new(field.params.clone(), f.clone(), start_x.clone(), start_t, cfg.seed)?;
    let max = greedy_strategy(&field, GreedyMode::Max);
    let min = greedy_strategy(&field, GreedyMode::Min);
    let outcomes = simulate(&game, &max, &min, spec.trials as usize)?;
    let estimate = summarize(&outcomes, cfg.seed)?;
    let solved = field.eval_state(&start_x, lattice_index(&field, start_t)?)?;
    if spec.write_outcomes {
        write_outcomes_csv(art.create("outcomes.csv")?, &outcomes)?;
    }
    let allowed = spec.sigmas * estimate.std_error + spec.slack;
    let mut checks = vec![
        CheckRecord::upper(
            "game_value_consistency",
            json!({
                "start_x": start_x,
                "start_t": start_t,
                "trials": spec.trials,
                "solved_value": solved,
                "mean": estimate.mean,
                "std_error": estimate.std_error,
            }),
            (estimate.mean - solved).abs(),
            allowed,
            0.0,
            "greedy-versus-greedy Monte Carlo value agrees with the solved field",
        )
        .with_seed(cfg.seed),
        CheckRecord::upper(
            "termination_bound",
            json!({ "start_t": start_t, "trials": spec.trials }),
            estimate.max_steps as f64,
            game.step_bound() as f64,
            0.0,
            "every trajectory stops within ceil(2 t0 / eps^2) + 1 rounds",
        )
        .with_seed(cfg.seed),
    ];
    let osc = if cfg.solve.time_osc {
        let region = QRegion::largest(&field.params, cfg.solve.osc_radius_cap);
        let rep = time_osc_check(&field, &region)?;
        checks.push(osc_record(&rep, field.params.epsilon));
        Some(rep)
    } else {
        None
    };
    Ok(Output {
        checks,
        details: json!({
            "time_oscillation": osc,
            "estimate": estimate,
            "solved_value": solved,
            "step_bound": game.step_bound(),
            "strategies": [max.label(), min.label()],
        }),
    })
}

fn run_expansion(cfg: &RunConfig) -> Result<Output, CliError> {
    let e = &cfg.expansion;
    let n = cfg.domain.dim;
    let quad = disk_quadrature(n, cfg.quadrature.m)?;
    let sweep = quadratic_sweep(
        cfg.alpha,
        e.quad_epsilon,
        n,
        &e.direction_counts,
        &quad,
        e.quadratics,
        e.min_gradient,
        cfg.seed,
    )?;
    let mut checks = Vec::new();
    for (k, &count) in e.direction_counts.iter().enumerate() {
        checks.push(
            CheckRecord::upper(
                "quadratic_residual_within_bound",
                json!({ "K": count, "epsilon": e.quad_epsilon, "quadratics": e.quadratics }),
                sweep.worst_excess[k],
                0.0,
                0.0,
                "largest |R| - tol(K) over random quadratics, tol from the covering angle",
            )
            .with_seed(cfg.seed),
        );
    }
    for k in 1..e.direction_counts.len() {
        let prev = sweep.worst_residual[k - 1];
        checks.push(
            CheckRecord::upper(
                "quadratic_residual_decreases",
                json!({
                    "K_from": e.direction_counts[k - 1],
                    "K_to": e.direction_counts[k],
                    "noise": e.noise,
                }),
                sweep.worst_residual[k],
                prev,
                e.noise * prev,
                "worst residual over the quadratics does not grow as K doubles",
            )
            .with_seed(cfg.seed),
        );
    }
    let origin = vec![0.0; n];
    let heat = exp_heat_rate(
        cfg.alpha,
        n,
        e.heat_k,
        &e.heat_epsilons,
        cfg.directions.k,
        &quad,
        &origin,
        0.0,
    )?;
    let heat_params = json!({ "epsilons": e.heat_epsilons, "k": e.heat_k, "K": cfg.directions.k });
    checks.push(CheckRecord::lower(
        "exp_heat_rate_min",
        heat_params.clone(),
        heat.rate,
        e.rate_min,
        0.0,
        "fitted convergence rate of the exponential heat residual, lower end",
    ));
    checks.push(CheckRecord::upper(
        "exp_heat_rate_max",
        heat_params,
        heat.rate,
        e.rate_max,
        0.0,
        "fitted convergence rate of the exponential heat residual, upper end",
    ));
    Ok(Output {
        checks,
        details: json!({
            "coefficients": effective_coefficients(cfg.alpha, n),
            "quadratic_sweep": sweep,
            "exp_heat": heat,
        }),
    })
}

fn run_regularity(cfg: &RunConfig) -> Result<Output, CliError> {
    let f = cfg.boundary()?;
    let spec = &cfg.regularity;
    let region = cfg.region()?;
    let mut checks = Vec::new();
    let mut moduli = Vec::new();
    let mut oscillations = Vec::new();
    for &eps in &spec.epsilons {
        let pb = cfg.problem_at(eps)?;
        let solver = Solver::new(&pb.params, f, &pb.grid, &pb.dirs, &pb.quad)?;
        let field = solver.solve_window(|t| region.in_window(t))?;
        let m = empirical_modulus(&field, spec.delta, &region, spec.samples, cfg.seed)?;
        if spec.time_osc {
            let rep = time_osc_check(&field, &region)?;
            checks.push(osc_record(&rep, eps));
            oscillations.push(rep);
        }
        moduli.push(json!({ "epsilon": eps, "h": field.grid.spacing, "report": m }));
    }
    let constants: Vec<f64> = moduli
        .iter()
        .map(|m| m["report"]["constant"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let hi = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if hi <= 1e-12 { 1.0 } else { hi / lo };
    checks.push(
        CheckRecord::upper(
            "modulus_stability",
            json!({ "epsilons": spec.epsilons, "delta": spec.delta, "constants": constants }),
            ratio,
            spec.max_ratio,
            0.0,
            "largest over smallest empirical modulus constant across step lengths",
        )
        .with_seed(cfg.seed),
    );
    Ok(Output {
        checks,
        details: json!({
            "region": region,
            "moduli": moduli,
            "time_oscillation": oscillations,
        }),
    })
}

fn run_barrier(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = &cfg.barrier;
    let n = cfg.domain.dim;
    let dirs = direction_set(n, cfg.directions.k)?;
    let quad = disk_quadrature(n, cfg.quadrature.m)?;
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for &eps in &spec.epsilons {
        let params = cfg.params_at(eps)?;
        let grid = make_grid(&params.cylinder.space, spec.spacing)?;
        for &a in &spec.a {
            for &r in &spec.r {
                for kind in [BarrierKind::Upper, BarrierKind::Lower] {
                    let rep = barrier_check(kind, a, r, spec.c, &params, &dirs, &quad, &grid)?;
                    checks.push(CheckRecord::upper(
                        "barrier_inequality",
                        json!({ "kind": kind, "A": a, "r": r, "epsilon": eps, "c": spec.c }),
                        rep.max_violation,
                        rep.bound,
                        rep.tolerance,
                        "one-step defect of the barrier is at most -(3/2) A eps^2 / r^2",
                    ));
                    reports.push(rep);
                }
            }
        }
    }
    Ok(Output {
        checks,
        details: json!({ "barriers": reports }),
    })
}

fn run_aux(cfg: &RunConfig) -> Result<Output, CliError> {
    let spec = &cfg.aux;
    let n = cfg.domain.dim;
    let mut checks = Vec::new();
    let mut omegas = Vec::new();
    for &gamma in &spec.gammas {
        for &omega0 in &spec.omega0s {
            let rep = omega_check(gamma, omega0, spec.omega_samples)?;
            let w = OmegaParams::new(gamma, omega0)?;
            let p = json!({ "gamma": gamma, "omega0": omega0, "samples": spec.omega_samples });
            let mut min_step = f64::INFINITY;
            let mut prev = w.value(0.0)?;
            for i in 1..=spec.omega_samples {
                let t = (w.omega1() * i as f64 / spec.omega_samples as f64).min(w.omega1());
                let v = w.value(t)?;
                min_step = min_step.min(v - prev);
                prev = v;
            }
            let ends = (w.derivative(0.0)? - 1.0).abs() + (w.derivative(w.omega1())? - 0.5).abs();
            checks.push(CheckRecord::lower(
                "omega_derivative_min",
                p.clone(),
                rep.min_derivative,
                0.5,
                rep.tolerance,
                "omega' >= 1/2 on [0, omega1]",
            ));
            checks.push(CheckRecord::upper(
                "omega_derivative_max",
                p.clone(),
                rep.max_derivative,
                1.0,
                rep.tolerance,
                "omega' <= 1 on [0, omega1]",
            ));
            checks.push(CheckRecord::upper(
                "omega_concavity",
                p.clone(),
                rep.max_second_derivative,
                0.0,
                0.0,
                "omega'' < 0 on (0, omega1]",
            ));
            checks.push(CheckRecord::lower(
                "omega_increasing",
                p.clone(),
                min_step,
                0.0,
                0.0,
                "smallest increment of omega between consecutive samples",
            ));
            checks.push(CheckRecord::upper(
                "omega_derivative_consistency",
                p.clone(),
                rep.fd_excess,
                0.0,
                0.0,
                "central differences match omega' within their truncation bound",
            ));
            checks.push(CheckRecord::upper(
                "omega_endpoint_slopes",
                p,
                ends,
                0.0,
                1e-12,
                "omega'(0) = 1 and omega'(omega1) = 1/2",
            ));
            omegas.push(rep);
        }
    }
    let rot = paired_rotation_check(n, spec.pairs, spec.vectors, cfg.seed)?;
    checks.push(
        CheckRecord::upper(
            "paired_rotation_bound",
            json!({ "dim": n, "pairs": spec.pairs, "vectors": spec.vectors }),
            rot.max_excess,
            0.0,
            rot.tolerance,
            "|P_x h - P_z h| <= |nu_x + nu_z| for unit h orthogonal to e1",
        )
        .with_seed(cfg.seed),
    );
    let aux = aux_consistency_check(&cfg.aux_functions(0.0), n, spec.points, cfg.seed)?;
    let p = json!({
        "C": spec.c, "M": spec.m, "N": spec.n_annuli, "delta": spec.delta,
        "r": spec.r, "epsilon": cfg.epsilon, "points": spec.points,
    });
    checks.push(
        CheckRecord::upper(
            "aux_reconstruction",
            p.clone(),
            aux.reconstruction_error,
            0.0,
            aux.tolerance,
            "H equals f1 - f2 + g pointwise",
        )
        .with_seed(cfg.seed),
    );
    checks.push(
        CheckRecord::upper(
            "f2_constant_on_annuli",
            p.clone(),
            aux.annulus_spread,
            0.0,
            0.0,
            "f2 takes one value on each annulus",
        )
        .with_seed(cfg.seed),
    );
    checks.push(
        CheckRecord::upper(
            "f2_nonincreasing",
            p,
            aux.monotonicity_violation,
            0.0,
            0.0,
            "f2 does not increase from an annulus to an outer one",
        )
        .with_seed(cfg.seed),
    );
    Ok(Output {
        checks,
        details: json!({ "omega": omegas, "paired_rotation": rot, "aux_consistency": aux }),
    })
}
