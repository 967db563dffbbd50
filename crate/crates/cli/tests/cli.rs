use std::path::Path;
use std::process::Command as Process;

use midrange_cli::{
    apply_overrides, execute, parse_config, render, Command, ParsedConfig, Report, RunConfig,
    REPORT_SCHEMA,
};
use midrange_core::domain::{BoundaryData, SpaceBox};
use midrange_core::dpp::read_field_csv;
use proptest::prelude::*;

fn parsed(text: &str, out: &Path) -> ParsedConfig {
    let mut p = parse_config(text).unwrap();
    apply_overrides(&mut p, None, Some(out.to_path_buf())).unwrap();
    p
}

fn schema_errors(report: &Report) -> Vec<String> {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let instance = serde_json::to_value(report).unwrap();
    validator
        .iter_errors(&instance)
        .map(|e| format!("{e} at {}", e.instance_path()))
        .collect()
}

const SOLVE_CONSTANT: &str = r#"
command = "solve"
alpha = 0.5
epsilon = 0.1
T = 0.05
[grid]
h = 0.05
[F]
kind = "constant"
value = 1.75
[solve]
compare_exact = true
exact_tolerance = 1e-12
"#;

#[test]
fn solve_constant_writes_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = parsed(SOLVE_CONSTANT, dir.path());
    let outcome = execute(&p, 1).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    assert!(outcome.report.consistent());
    assert!(schema_errors(&outcome.report).is_empty(), "{:?}", schema_errors(&outcome.report));
    assert_eq!(outcome.report.artifacts, ["field.csv", "field.json"]);

    let grid = midrange_core::domain::make_grid(&SpaceBox::centered(2, 1.0).unwrap(), 0.05)
        .unwrap();
    let csv = std::fs::File::open(dir.path().join("field.csv")).unwrap();
    let slices = read_field_csv(std::io::BufReader::new(csv), &grid).unwrap();
    assert_eq!(slices.len(), 11);
    for (_, values) in &slices {
        assert!(values.iter().all(|&v| (v - 1.75).abs() <= 1e-12));
    }
    let sidecar: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(dir.path().join("field.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["slices"], 11);

    let on_disk: Report =
        serde_json::from_reader(std::fs::File::open(&outcome.report_path).unwrap()).unwrap();
    assert_eq!(on_disk, outcome.report);
}

#[test]
fn barrier_example_margin() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
command = "verify-barrier"
alpha = 0.5
epsilon = 0.05
T = 1.0
[barrier]
a = [1.0]
r = [0.5]
epsilons = [0.05]
"#;
    let outcome = execute(&parsed(text, dir.path()), 1).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    assert_eq!(outcome.report.checks.len(), 2);
    for c in &outcome.report.checks {
        assert!((c.bound + 0.015).abs() < 1e-15);
        assert!(c.value <= -0.015 + c.tolerance, "{c:?}");
    }
    assert!(schema_errors(&outcome.report).is_empty());
}

#[test]
fn regularity_example_two_resolutions() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
command = "verify-regularity"
alpha = 0.5
epsilon = 0.1
T = 0.08
[grid]
h_per_eps = 0.25
[directions]
K = 16
[F]
kind = "exp_heat"
k = 1.0
alpha = 0.5
[regularity]
epsilons = [0.1, 0.05]
"#;
    let outcome = execute(&parsed(text, dir.path()), 0).unwrap();
    assert_eq!(outcome.exit_code(), 0, "{:#?}", outcome.report.checks);
    let moduli = outcome.report.details["moduli"].as_array().unwrap();
    assert_eq!(moduli.len(), 2);
    let c: Vec<f64> = moduli
        .iter()
        .map(|m| m["report"]["constant"].as_f64().unwrap())
        .collect();
    assert!(c[0].max(c[1]) <= 2.0 * c[0].min(c[1]), "{c:?}");
    assert!(schema_errors(&outcome.report).is_empty());
}

#[test]
fn every_command_report_validates() {
    let base = "alpha = 0.5\nepsilon = 0.1\nT = 0.05\n[grid]\nh = 0.05\n[directions]\nK = 16\n\
                [F]\nkind = \"linear\"\na = [1.0, -0.5]\nc = 0.25\n";
    let extra = [
        ("solve", ""),
        ("simulate", "[simulate]\ntrials = 200\n"),
        ("verify-expansion", "[expansion]\nquadratics = 3\n"),
        ("verify-barrier", "[barrier]\na = [1.0]\nr = [0.5]\nepsilons = [0.1]\n"),
        ("verify-aux", "[aux]\npairs = 20\nvectors = 20\npoints = 200\nomega_samples = 50\n"),
    ];
    for (command, tail) in extra {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("command = \"{command}\"\n{base}{tail}");
        let outcome = execute(&parsed(&text, dir.path()), 1).unwrap();
        let errors = schema_errors(&outcome.report);
        assert!(errors.is_empty(), "{command}: {errors:?}");
        assert!(outcome.report.consistent(), "{command}");
        assert_eq!(outcome.report.command, command);
    }
}

#[test]
fn schema_rejects_inconsistent_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let mut report = execute(&parsed(SOLVE_CONSTANT, dir.path()), 1).unwrap().report;
    report.command = "plot".into();
    assert!(!schema_errors(&report).is_empty());
}

#[test]
fn determinism_across_runs_and_threads() {
    let text = r#"
command = "simulate"
alpha = 0.4
epsilon = 0.1
T = 0.05
seed = 11
[grid]
h = 0.05
[directions]
K = 16
[F]
kind = "exp_heat"
k = 1.0
alpha = 0.4
[simulate]
trials = 500
"#;
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 8, 1] {
        let r = execute(&parsed(text, dir.path()), threads).unwrap();
        assert_eq!(r.report.timing.threads, threads);
        outputs.push((
            r.report.deterministic_json().unwrap(),
            std::fs::read(dir.path().join("outcomes.csv")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_midrange"))
}

#[test]
fn exit_codes_follow_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");

    std::fs::write(&cfg, SOLVE_CONSTANT).unwrap();
    let out = dir.path().join("ok");
    let status = binary()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let report: Report =
        serde_json::from_reader(std::fs::File::open(out.join("report.json")).unwrap()).unwrap();
    assert!(report.pass);
    assert_eq!(report.provenance["out"], midrange_cli::Provenance::CommandLine);

    // the exponential residual converges faster than the default band allows
    std::fs::write(
        &cfg,
        "command = \"verify-expansion\"\nalpha = 0.5\nepsilon = 0.1\nT = 0.05\n\
         [expansion]\nquadratics = 2\n",
    )
    .unwrap();
    let out = dir.path().join("fail");
    let status = binary()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    let report: Report =
        serde_json::from_reader(std::fs::File::open(out.join("report.json")).unwrap()).unwrap();
    assert!(!report.pass);
    assert_eq!(report.config.seed, 4);

    // no room for two slices in the oscillation window: runtime error
    std::fs::write(&cfg, SOLVE_CONSTANT.replace("T = 0.05", "T = 0.006")).unwrap();
    let out = dir.path().join("err");
    let status = binary()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(!out.exists());

    std::fs::write(&cfg, SOLVE_CONSTANT.replace("alpha = 0.5", "alpha = 1.2")).unwrap();
    let status = binary()
        .args(["--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&status.stderr).contains("alpha must lie in (0,1)"));
}

#[test]
fn render_example_parses_back() {
    let p = parse_config(SOLVE_CONSTANT).unwrap();
    let again = parse_config(&render(&p.config).unwrap()).unwrap();
    assert_eq!(again.config, p.config);
}

fn boundary_strategy() -> impl Strategy<Value = BoundaryData> {
    prop_oneof![
        (-5.0..5.0f64).prop_map(|value| BoundaryData::Constant { value }),
        (prop::collection::vec(-2.0..2.0f64, 2), -1.0..1.0f64)
            .prop_map(|(a, c)| BoundaryData::Linear { a, c }),
        (0.1..2.0f64, 0.05..0.95f64).prop_map(|(k, alpha)| BoundaryData::ExpHeat { k, alpha }),
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(c, time_coeff, space_coeff)| {
            BoundaryData::Quadratic { c, time_coeff, space_coeff }
        }),
        (0.1..3.0f64).prop_map(|s| BoundaryData::expression(&format!("sin({s:?}*x1) + t*x2"))
            .unwrap()),
    ]
}

fn command_strategy() -> impl Strategy<Value = Command> {
    prop_oneof![
        Just(Command::Solve),
        Just(Command::Simulate),
        Just(Command::VerifyExpansion),
        Just(Command::VerifyRegularity),
        Just(Command::VerifyBarrier),
        Just(Command::VerifyAux),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_render_round_trip(
        command in command_strategy(),
        alpha in 0.01..0.99f64,
        epsilon in 0.02..0.2f64,
        horizon in 0.07..0.5f64,
        seed in 0..i64::MAX as u64,
        f in boundary_strategy(),
        k in 2usize..40,
        m in 2usize..6,
        h_choice in 0usize..3,
        h_value in 0.1..2.0f64,
    ) {
        let mut text = format!(
            "command = \"{}\"\nalpha = {alpha:?}\nepsilon = {epsilon:?}\nT = {horizon:?}\nseed = {seed}\n",
            command.name()
        );
        text += &format!("[directions]\nK = {}\n[quadrature]\nm = {m}\n", 2 * k);
        let key = ["h", "h_coeff", "h_per_eps"][h_choice];
        let h = if h_choice == 0 { 0.01 * h_value } else { h_value };
        text += &format!("[grid]\n{key} = {h:?}\n");
        let f_table = toml::to_string(&f).unwrap();
        text += &format!("[F]\n{f_table}");
        let first = parse_config(&text).unwrap();
        let rendered = render(&first.config).unwrap();
        let second: RunConfig = parse_config(&rendered).unwrap().config;
        prop_assert_eq!(&second, &first.config);
        prop_assert_eq!(second.boundary.as_ref(), Some(&f));
    }
}
