//! `sle`: seeded SLE experiments writing CSV, JSON, SVG and a manifest per run.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ConfigSource;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "sle", version, about = "Chordal SLE simulation and exponent checks")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Base name of the output files (defaults to the experiment name).
    #[arg(long, global = true)]
    name: Option<String>,
    /// TOML config, or the manifest of an earlier run to repeat it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for ensembles.
    #[arg(long, global = true, env = "SLE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a driving path and write its trace (CSV, optional SVG).
    Trace(commands::TraceArgs),
    /// Survival curve of the angular diffusion and its decay rate.
    Survival(commands::SurvivalArgs),
    /// Leading eigenvalue of the angular generator.
    Eigen(commands::EigenArgs),
    /// One-point hitting probabilities against the radius.
    Hitting(commands::HittingArgs),
    /// Two-point hitting probabilities against radius and separation.
    Twopoint(commands::TwoPointArgs),
    /// Box-counting dimension of sampled traces.
    Boxdim(commands::BoxdimArgs),
    /// Partition sums over composition pairs and their ratio to the bound.
    Partition(commands::PartitionArgs),
    /// Markdown table of every result JSON in a directory.
    Report(report::ReportArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let source = match &cli.config {
        Some(p) => ConfigSource::load(p)?,
        None => ConfigSource::None,
    };
    let ctx = commands::Context { out: cli.out, name: cli.name, source };
    match cli.command {
        Command::Trace(a) => commands::trace(&ctx, &a),
        Command::Survival(a) => commands::survival(&ctx, &a),
        Command::Eigen(a) => commands::eigen(&ctx, &a),
        Command::Hitting(a) => commands::hitting(&ctx, &a),
        Command::Twopoint(a) => commands::twopoint(&ctx, &a),
        Command::Boxdim(a) => commands::boxdim(&ctx, &a),
        Command::Partition(a) => commands::partition(&ctx, &a),
        Command::Report(a) => report::report(&ctx, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
