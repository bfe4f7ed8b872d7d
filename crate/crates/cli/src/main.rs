use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use surfflow_cli::config::{apply_overrides, parse_config, Experiment, SimConfig};
use surfflow_cli::{run_experiment, CliError};

#[derive(Parser)]
#[command(name = "surfflow", about = "Free-surface flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; unspecified keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set domain.points=48`. May be repeated.
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    /// Directory for the report and CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    Simulate,
    LinearDecay,
    DuhamelCheck,
    ResolventSweep,
    ConvergenceStudy,
    ConsistencyCheck,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Simulate => Experiment::Simulate,
            Command::LinearDecay => Experiment::LinearDecay,
            Command::DuhamelCheck => Experiment::DuhamelCheck,
            Command::ResolventSweep => Experiment::ResolventSweep,
            Command::ConvergenceStudy => Experiment::ConvergenceStudy,
            Command::ConsistencyCheck => Experiment::ConsistencyCheck,
        }
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let base = match &cli.config {
        Some(p) => parse_config(p)?,
        None => SimConfig::default(),
    };
    let mut cfg = apply_overrides(&base, &cli.overrides)?;
    cfg.experiment.kind = cli.command.experiment();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    let report = pool.install(|| run_experiment(&cfg, Some(&cli.out)))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        println!("[{}] criterion {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.criterion, c.describe());
    }
    for (name, v) in &report.values {
        println!("{name} = {v:.6e}");
    }
    if let Some(f) = &report.failure {
        eprintln!("run failed: {f}");
    }
    println!("report written to {}", cli.out.join(format!("{}_report.json", report.experiment)).display());
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
