//! Reward-poisoning laboratory command line.

use rplab_cli::{plotdata, run, targets, verify};

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use rplab::attacks::AttackKind;

#[derive(Parser)]
#[command(name = "rplab", about = "Train agents under reward-poisoning attacks and verify the attack theory on small MDPs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment: seeded repeats, step logs, reports.
    Run {
        /// Experiment config file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's repeat count.
        #[arg(long)]
        repeats: Option<usize>,
        /// Worker threads for parallel repeats (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Generate random/medium/expert target policies plus a returns manifest.
    Targets {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Brute-force verification on an enumerable environment; exit 0 iff
    /// all checks pass.
    Verify {
        /// Environment config file (JSON), e.g. {"gridworld": {...}}.
        #[arg(long)]
        config: PathBuf,
        /// Target policy file.
        #[arg(long)]
        target: PathBuf,
        /// Attack kind to check for membership.
        #[arg(long, default_value = "adaptive")]
        attack: String,
        /// Penalty magnitude; omit to derive a sufficient one.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Flatten completed experiment outputs into plot-ready CSV tables.
    Plotdata {
        /// Directory holding experiment outputs.
        #[arg(long)]
        dir: PathBuf,
    },
}

fn set_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn parse_attack_kind(name: &str) -> Result<AttackKind> {
    Ok(match name {
        "none" => AttackKind::None,
        "adaptive" => AttackKind::Adaptive,
        "greedy" => AttackKind::Greedy,
        "neighborhood" => AttackKind::Neighborhood,
        other => anyhow::bail!("unknown attack kind {other:?}"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            repeats,
            jobs,
        } => {
            set_jobs(jobs);
            run::cmd_run(&config, &out, seed, repeats).map(|()| true)
        }
        Command::Targets {
            config,
            out,
            seed,
            jobs,
        } => {
            set_jobs(jobs);
            targets::cmd_targets(&config, &out, seed).map(|()| true)
        }
        Command::Verify {
            config,
            target,
            attack,
            delta,
            seed,
            jobs,
        } => {
            set_jobs(jobs);
            parse_attack_kind(&attack).and_then(|kind| {
                verify::cmd_verify(&config, &target, &verify::VerifyArgs { kind, delta, seed })
            })
        }
        Command::Plotdata { dir } => plotdata::cmd_plotdata(&dir).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
