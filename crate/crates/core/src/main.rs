use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use maxstef::check::run_checks;
use maxstef::config::{parse_config, SimConfig};
use maxstef::output::{write_limit, write_limit_matrices, write_report, write_snapshots, write_sweep};
use maxstef::sim::{grid_limit, run, run_alpha_sweep, GridField};

#[derive(Parser)]
#[command(name = "maxstef", version, about = "Moment model of diffusing gas mixtures")]
struct Cli {
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured problem and write snapshots and the report.
    Run { config: PathBuf },
    /// Solve the algebraic limit on the configured initial state.
    Limit { config: PathBuf },
    /// Convergence study over decreasing alphas.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
    },
    /// Invariant checks on the configured initial state.
    Check { config: PathBuf },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

fn validation(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load(path: &Path) -> Result<(SimConfig, GridField), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let config = parse_config(&text).map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let grid = config.initial_grid().map_err(validation)?;
    Ok((config, grid))
}

fn out_dir(cli_out: &Option<PathBuf>, config: &SimConfig) -> Result<PathBuf, Failure> {
    let dir = cli_out.clone().unwrap_or_else(|| config.output.directory.clone());
    std::fs::create_dir_all(&dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config } => {
            let (cfg, grid) = load(&config)?;
            let dir = out_dir(&cli.out, &cfg)?;
            let out = run(grid, &cfg.spec, &cfg.settings).map_err(validation)?;
            write_snapshots(&dir.join("snapshots.csv"), &out.snapshots).map_err(runtime)?;
            write_report(&dir.join("report.csv"), &out.report).map_err(runtime)?;
            eprintln!("{} steps to t = {}; outputs in {}", out.steps, out.t, dir.display());
            if let Some(e) = out.failure {
                return Err(runtime(format!("stopped at t = {}: {e}", out.t)));
            }
        }
        Command::Limit { config } => {
            let (cfg, grid) = load(&config)?;
            let dir = out_dir(&cli.out, &cfg)?;
            let limits = grid_limit(&grid, &cfg.spec).map_err(runtime)?;
            write_limit(&dir.join("limit.csv"), &grid, &limits).map_err(runtime)?;
            write_limit_matrices(&dir.join("limit_matrices.csv"), &limits).map_err(runtime)?;
            eprintln!("limit solved on {} cells; outputs in {}", limits.len(), dir.display());
        }
        Command::Sweep { config, alphas } => {
            let (cfg, grid) = load(&config)?;
            let dir = out_dir(&cli.out, &cfg)?;
            let rows = run_alpha_sweep(&grid, &cfg.spec, &alphas, &cfg.sweep).map_err(|e| match e {
                maxstef::sim::SimError::BadSweep => validation(e),
                other => runtime(other),
            })?;
            write_sweep(&dir.join("sweep.csv"), &rows).map_err(runtime)?;
            for r in &rows {
                eprintln!(
                    "alpha {:<8} velocity error {:.3e} (order {}), deviatoric error {:.3e}",
                    r.alpha,
                    r.velocity_error,
                    r.velocity_order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into()),
                    r.deviatoric_error
                );
            }
        }
        Command::Check { config } => {
            let (cfg, grid) = load(&config)?;
            let results = run_checks(&grid, &cfg.spec);
            let mut failed = 0;
            for r in &results {
                eprintln!(
                    "{} {} (worst {:.3e}, tolerance {:.1e})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.value,
                    r.tolerance
                );
                failed += usize::from(!r.passed);
            }
            if failed > 0 {
                return Err(validation(format!("{failed} invariant check(s) failed")));
            }
            eprintln!("all {} invariants passed", results.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
