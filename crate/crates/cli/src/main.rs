// NaN must fail these checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigArgs, ExperimentConfig, DEFAULT_EPSILONS};
use error::Result;

/// Simulations of the transition equation between classical and quantum
/// dynamics for two interfering Gaussian packets.
#[derive(Debug, Parser)]
#[command(name = "qtransition", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate each epsilon and write snapshots plus a manifest
    Simulate(ConfigArgs),
    /// Integrate an epsilon list in parallel (default 0,0.02,0.05,0.2,0.6,1)
    Sweep(ConfigArgs),
    /// Write closed-form densities for every (epsilon, time) pair
    Analytic(ConfigArgs),
    /// Split a complex field CSV into amplitude, action, U, current, velocity
    Decompose(DecomposeArgs),
    /// Grid-refinement study for one epsilon
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
#[command(rename_all = "snake_case")]
struct DecomposeArgs {
    /// CSV with x, re_psi and im_psi columns
    input: PathBuf,
    /// Output CSV (default: <output root>/<input stem>_polar.csv)
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of grids, each halving the spacing
    #[arg(long, default_value_t = 3)]
    levels: usize,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.resolve(ExperimentConfig::default())?;
            commands::simulate(&cfg, &args.output_root())
        }
        Command::Sweep(args) => {
            let defaults = ExperimentConfig {
                epsilon: DEFAULT_EPSILONS.to_vec(),
                ..Default::default()
            };
            let cfg = args.resolve(defaults)?;
            commands::sweep(&cfg, &args.output_root())
        }
        Command::Analytic(args) => {
            let cfg = args.resolve(ExperimentConfig::default())?;
            commands::analytic(&cfg, &args.output_root())
        }
        Command::Decompose(args) => {
            let root = config::resolve_output_dir(args.output_dir.as_deref());
            let output = args
                .output
                .unwrap_or_else(|| commands::default_decompose_output(&args.input, &root));
            commands::decompose(&args.input, &output, args.hbar, args.mass)
        }
        Command::Convergence(args) => {
            let cfg = args.config.resolve(ExperimentConfig::default())?;
            commands::convergence(&cfg, args.levels, &args.config.output_root())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
