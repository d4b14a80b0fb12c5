//! `qtoa`: batch front end for the time-of-arrival library.
//!
//! Every run writes its CSV tables, `manifest.json` and `summary.txt` into
//! the output directory. Exit status 0 means success, 2 a configuration
//! error and 3 a numerical failure; in the failing cases `error.json`
//! carries a machine-readable record.

mod commands;
mod config;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::{CliError, Run};
use crate::reproduce::Target;

#[derive(Debug, Parser)]
#[command(name = "qtoa", version, about = "Quantum time of arrival in a uniform gravitational field")]
struct Cli {
    /// TOML run configuration (defaults to the reference run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "qtoa-out")]
    out: PathBuf,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the quadrature and eigenvalue tolerances.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact expectation value of the arrival-time operator.
    Expectation,
    /// Classical term and ħ-expansion table.
    Semiclassical,
    /// Eigenvalues and eigenfunctions of the confined operator.
    Spectrum,
    /// Arrival-time distribution and its covariance check.
    Distribution,
    /// Position densities of the evolved packet.
    Evolve,
    /// Grid of corrections or distributions over the `[sweep]` axes.
    Sweep,
    /// Regenerate a reference number or figure dataset with pinned inputs.
    Reproduce {
        #[arg(value_enum)]
        id: Target,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Expectation => "expectation".into(),
            Command::Semiclassical => "semiclassical".into(),
            Command::Spectrum => "spectrum".into(),
            Command::Distribution => "distribution".into(),
            Command::Evolve => "evolve".into(),
            Command::Sweep => "sweep".into(),
            Command::Reproduce { id } => format!("reproduce {}", id.name()),
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let cfg = match (&cli.command, &cli.config) {
        (Command::Reproduce { .. }, Some(_)) => {
            return Err(CliError::Config("reproduce runs use pinned inputs and take no --config".into()))
        }
        (Command::Reproduce { id }, None) => reproduce::config(*id),
        (_, Some(path)) => RunConfig::load(path)?,
        (_, None) => RunConfig::default(),
    };
    Ok(match cli.tolerance {
        Some(tol) => cfg.with_tolerance(tol)?,
        None => cfg,
    })
}

fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let cfg = load(cli)?;
    let inputs = match &cli.command {
        Command::Reproduce { id } => reproduce::inputs(*id, &cfg),
        _ => serde_json::to_value(&cfg)?,
    };
    let mut run = Run::new(&cli.out, &cli.command.name(), &cfg.experiment, inputs, cfg.semiclassical.side)?;
    run.record("physical_params", serde_json::to_value(cfg.physics.params()?)?);
    match &cli.command {
        Command::Expectation => commands::expectation(&cfg, &mut run).map(drop)?,
        Command::Semiclassical => commands::semiclassical(&cfg, &mut run).map(drop)?,
        Command::Spectrum => commands::spectrum(&cfg, &mut run)?,
        Command::Distribution => commands::distribution(&cfg, &mut run).map(drop)?,
        Command::Evolve => commands::evolve(&cfg, &mut run)?,
        Command::Sweep => commands::sweep(&cfg, &mut run)?,
        Command::Reproduce { id } => reproduce::run(*id, &cfg, &mut run)?,
    }
    run.finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let err = match execute(&cli) {
        Ok(failures) if failures.is_empty() => return ExitCode::SUCCESS,
        Ok(failures) => CliError::Partial(failures.join("; ")),
        Err(e) => e,
    };
    eprintln!("error: {err}");
    output::write_error(&cli.out, &command, &err);
    ExitCode::from(err.exit_code())
}
