use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use midrange_cli::{apply_overrides, execute, parse_config, CliError};

/// Runs one solve, simulate or verify pipeline described by a config file.
///
/// Exit status: 0 when every check passes, 2 when a check fails, 1 on a
/// configuration or runtime error.
#[derive(Debug, Parser)]
#[command(name = "midrange", version)]
struct Args {
    /// Path of the TOML run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn run(args: Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut parsed = parse_config(&text)?;
    apply_overrides(&mut parsed, args.seed, args.out)?;
    for w in parsed.config.warnings() {
        eprintln!("warning: {w}");
    }
    let outcome = execute(&parsed, args.threads)?;
    for c in &outcome.report.checks {
        println!(
            "{} {} margin={:e} tolerance={:e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.margin,
            c.tolerance
        );
    }
    println!("report: {}", outcome.report_path.display());
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let code = match run(Args::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            CliError::EXIT_CODE
        }
    };
    ExitCode::from(code as u8)
}
