//! `lrd`: config-driven experiments on long-range-dependent Markov chains.

mod config;
mod error;
mod experiment;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use config::{ExperimentConfig, ExperimentKind, LogBase, Overrides};
use error::CliError;

#[derive(Parser)]
#[command(name = "lrd", version, about = "Convergence and entropy experiments for Markov chains with heavy-tailed return times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its artifacts.
    Run(RunArgs),
    /// Run several configs of the same kind into long-format CSVs.
    Compare(CompareArgs),
    /// Print the ergodicity class of the configured chain.
    Classify(RunArgs),
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides `run.output`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid as MIN:MAX:POINTS.
    #[arg(long, value_parser = config::parse_grid_flag)]
    grid: Option<(u64, u64, usize)>,
    #[arg(long, value_enum)]
    log_base: Option<LogBase>,
    /// Truncation tolerance in (0, 1e-3].
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            grid: self.grid,
            log_base: self.log_base,
            tolerance: self.tolerance,
            experiment: None,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    /// Repeat once per config.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn run(args: RunArgs, experiment: Option<ExperimentKind>) -> Result<(), CliError> {
    let started = Instant::now();
    let overrides = Overrides {
        experiment,
        ..args.common.overrides()
    };
    let cfg = config::load(&args.config, &overrides)?;
    let outcome = experiment::run(&cfg)?;
    output::write_run(&cfg.run.output, &cfg, &outcome.artifacts, started.elapsed())?;
    println!("{}", outcome.summary);
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if args.configs.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least 2 --config files, got {}",
            args.configs.len()
        )));
    }
    let overrides = Overrides {
        out: None,
        ..args.common.overrides()
    };
    let configs: Vec<ExperimentConfig> = args
        .configs
        .iter()
        .map(|p| config::load(p, &overrides))
        .collect::<Result<_, _>>()?;
    let kind = configs[0].experiment;
    if let Some(c) = configs.iter().find(|c| c.experiment != kind) {
        return Err(CliError::invalid(
            "experiment",
            format!(
                "compare needs one experiment kind, got {} and {}",
                kind.name(),
                c.experiment.name()
            ),
        ));
    }
    for (k, c) in configs.iter().enumerate() {
        if configs[..k].iter().any(|d| d.label == c.label) {
            return Err(CliError::invalid("label", format!("duplicate label {:?}", c.label)));
        }
    }
    let outcomes: Vec<experiment::Outcome> = configs
        .par_iter()
        .map(experiment::run)
        .collect::<Result<_, _>>()?;
    let dir = args.common.out.unwrap_or_else(|| PathBuf::from("lrd-compare"));
    let runs: Vec<_> = configs
        .into_iter()
        .zip(outcomes)
        .map(|(c, o)| {
            println!("{}: {}", c.label, o.summary);
            (c, o.artifacts)
        })
        .collect();
    output::write_compare(&dir, &runs, started.elapsed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{e}");
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a, None),
        Command::Classify(a) => run(a, Some(ExperimentKind::Classify)),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
