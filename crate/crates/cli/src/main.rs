//! `spectro`: Hermite-spectrogram densities, sampling and expectation values
//! from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "spectro", version, about = "Hermite-spectrogram phase-space densities and expectation values")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (falls back to SPECTRO_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path (a file prefix for `sample`); stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the one in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the signed weights of μ^N as exact rationals.
    Coeffs {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        order: u32,
    },
    /// Evaluate the Wigner function, a spectrogram or μ^N on a grid.
    Density {
        #[command(flatten)]
        common: Common,
        /// Grid `qmin:qmax:nq,pmin:pmax:np`, overriding the config.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Sample averaged spectrograms, one file pair per order.
    Sample {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate ⟨ψ, op(a) ψ⟩.
    Expect {
        #[command(flatten)]
        common: Common,
    },
    /// Expectation error against the Gaussian oracle over ε and N.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Weighted histogram of per-order samples.
    Histogram {
        #[command(flatten)]
        common: Common,
    },
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SPECTRO_THREADS") {
            Ok(v) if !v.trim().is_empty() => {
                Some(v.trim().parse().context("SPECTRO_THREADS must be a positive integer")?)
            }
            _ => None,
        },
    };
    if let Some(n) = n {
        anyhow::ensure!(n > 0, "thread count must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    let (common, grid) = match cli.command {
        Command::Coeffs { dim, order } => {
            print!("{}", commands::coeffs(dim, order)?);
            return Ok(());
        }
        Command::Density { ref common, ref grid } => (common, grid.as_deref().map(config::parse_grid).transpose()?),
        Command::Sample { ref common }
        | Command::Expect { ref common }
        | Command::Converge { ref common }
        | Command::Histogram { ref common } => (common, None),
    };
    let (path, out, seed) = (common.config.as_path(), common.out.as_deref(), common.seed);
    let artifacts = match &cli.command {
        Command::Density { .. } => commands::density(config::load(path)?, grid, out)?,
        Command::Sample { .. } => commands::sample(config::load(path)?, seed, out)?,
        Command::Expect { .. } => commands::expect(config::load(path)?, seed, out)?,
        Command::Converge { .. } => {
            if seed.is_some() {
                eprintln!("warning: converge is deterministic; --seed is ignored");
            }
            commands::converge(config::load(path)?, out)?
        }
        Command::Histogram { .. } => commands::histogram(config::load(path)?, seed, out)?,
        Command::Coeffs { .. } => unreachable!(),
    };
    output::emit(out, artifacts)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
