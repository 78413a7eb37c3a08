use std::path::PathBuf;
use std::process::ExitCode;

use beltrami_cli::{run, run_sweep, CliError, ExperimentConfig, SweepConfig, Task};
use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "beltrami", version, about = "Experiments with σ-harmonic maps and periodic homogenization")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Convert between a conductivity matrix and its Beltrami pair.
    Convert(Common),
    /// Solve one Dirichlet problem.
    Solve(Common),
    /// Build the primary pair and its σ-harmonic map.
    PrimaryPair(Common),
    /// Build the periodic cell map for a matrix A.
    Cell(Common),
    /// Compute the effective conductivity.
    Homogenize(Common),
    /// Weight diagnostics on det DU.
    Diagnose(Common),
    /// Run a list of configs of one task.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(verb: Verb) -> Result<bool, CliError> {
    let (task, common) = match verb {
        Verb::Sweep(c) => {
            let runs = SweepConfig::load(&c.config)?;
            let out = c.out.unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_sweep(&runs, &out, c.resolution, c.seed)?;
            return Ok(outcome.all_passed());
        }
        Verb::Convert(c) => (Task::Convert, c),
        Verb::Solve(c) => (Task::Solve, c),
        Verb::PrimaryPair(c) => (Task::PrimaryPair, c),
        Verb::Cell(c) => (Task::Cell, c),
        Verb::Homogenize(c) => (Task::Homogenize, c),
        Verb::Diagnose(c) => (Task::Diagnose, c),
    };
    let mut config = ExperimentConfig::load(&common.config)?;
    if config.task != task {
        return Err(CliError::Validation {
            field: "task".into(),
            message: format!("config declares {}, command is {}", config.task.name(), task.name()),
        });
    }
    config.apply_overrides(common.resolution, common.seed);
    let out = common.out.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let record = run(&config, &out)?;
    for c in record.failed_checks() {
        eprintln!("FAILED {}: {} {} {}", c.name, c.value, c.relation, c.bound);
    }
    Ok(record.all_passed)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli.verb) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
