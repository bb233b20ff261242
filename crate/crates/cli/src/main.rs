//! `s3d`: grow small neural networks by splitting neurons along the
//! eigen-directions of their splitting matrices, with signed output-weight
//! fractions.
//!
//! Subcommands: `toy-rbf` (the seeded curve-fitting reproduction), `grow`
//! (grow a stored model on a stored dataset), `gains` (per-neuron eigen
//! summary and gains), `verify` (randomized verification suites).
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 io/parse error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use s3d_core::harness::{
    run_gains, run_grow, run_toy_rbf, run_verify, ExperimentConfig, Method,
};
use s3d_core::Error;

#[derive(Parser)]
#[command(name = "s3d", version, about = "Progressive network growth by signed neuron splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration file; CLI flags override its fields
    #[arg(long)]
    config: PathBuf,
    /// Master seed for every random choice in the run
    #[arg(long)]
    seed: u64,
    /// Output directory for the CSV/JSON artifacts
    #[arg(long)]
    out: PathBuf,
    /// s2d (positive splittings) or s3d (signed splittings)
    #[arg(long)]
    method: Option<String>,
    /// Splitting multiplicity for s3d: 2, 3 or 4
    #[arg(long)]
    m: Option<usize>,
    /// Signed-weight budget c >= 1 (c = 1 collapses to s2d)
    #[arg(long)]
    c: Option<f64>,
    /// Number of growth rounds
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the one-dimensional RBF curve-fitting experiment
    ToyRbf(ExperimentArgs),
    /// Grow a stored model on a stored dataset
    Grow(ExperimentArgs),
    /// Report per-neuron spectra and splitting gains for a stored model
    Gains {
        /// Model JSON file
        #[arg(long)]
        model: PathBuf,
        /// Dataset CSV file
        #[arg(long)]
        data: PathBuf,
        /// Signed-weight budget c >= 1
        #[arg(long)]
        c: f64,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized verification suite
    Verify {
        /// gains, taylor, bounds, knapsack or eigen
        #[arg(long)]
        suite: String,
        /// Number of randomized trials
        #[arg(long)]
        trials: usize,
        /// Seed for the trial generator
        #[arg(long)]
        seed: u64,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::read_json(&args.config)?;
    cfg.seed = args.seed;
    if let Some(method) = &args.method {
        cfg.method = Method::from_name(method)?;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(c) = args.c {
        cfg.c = c;
    }
    if let Some(rounds) = args.rounds {
        cfg.rounds = Some(rounds);
    }
    Ok(cfg)
}

/// 0 success, 1 verification failure, 2 usage error, 3 io/parse error.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse(_) => 3,
        _ => 2,
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::ToyRbf(args) => {
            let cfg = load_config(&args)?;
            let summary = run_toy_rbf(&cfg, &args.out)?;
            eprintln!(
                "toy-rbf done: final loss {:.6e}, {} neurons, stopped by {}",
                summary.final_loss,
                summary.final_neuron_count,
                summary.stop.as_str()
            );
            Ok(0)
        }
        Command::Grow(args) => {
            let cfg = load_config(&args)?;
            let output = run_grow(&cfg, &args.out)?;
            eprintln!(
                "grow done: final loss {:.6e}, {} neurons, stopped by {}",
                output.final_loss,
                output.final_neuron_count,
                output.stop.as_str()
            );
            Ok(0)
        }
        Command::Gains { model, data, c, out } => {
            let report = run_gains(&model, &data, c)?;
            let text = report.to_json_string();
            match out {
                Some(path) => std::fs::write(path, text).map_err(Error::from)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Verify { suite, trials, seed, out } => {
            let report = run_verify(&suite, trials, seed)?;
            let text = report.to_json_string();
            match out {
                Some(path) => std::fs::write(path, text).map_err(Error::from)?,
                None => println!("{text}"),
            }
            eprintln!(
                "verify {}: {}/{} trials failed, worst margin {:.3e}",
                report.suite, report.failures, report.trials, report.worst_margin
            );
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
