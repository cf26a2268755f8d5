mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimo_deteq::channel::FadingKind;

use crate::error::CliError;

/// Deterministic-equivalent sum rates, iterative water-filling and
/// Monte-Carlo validation for correlated Rician MIMO multiple-access channels.
#[derive(Debug, Parser)]
#[command(name = "mimo-deteq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the fixed-point system at one evaluation point and print e, ẽ.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Deterministic and Monte-Carlo sum rate over a list of SNRs, as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated SNR values in dB.
        #[arg(long, allow_hyphen_values = true)]
        snr_db: String,
        /// gaussian, rayleigh, nakagami:M or lognormal[:SIGMA].
        #[arg(long, default_value = "rayleigh")]
        fading: FadingKind,
        /// Monte-Carlo draws per SNR point; 0 skips the simulation.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock milliseconds per row (otherwise written as 0 so
        /// output is reproducible byte for byte).
        #[arg(long)]
        timing: bool,
    },
    /// Optimize the input covariances at one SNR and write a JSON report.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also estimate the achieved rates at Q = I and Q* by Monte-Carlo.
        #[arg(long)]
        mc_validate: bool,
        #[arg(long, default_value = "rayleigh")]
        fading: FadingKind,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var("MIMO_DETEQ_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("MIMO_DETEQ_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure worker threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve { config, omega } => commands::solve(&config, omega),
        Command::Sweep {
            config,
            snr_db,
            fading,
            samples,
            seed,
            out,
            timing,
        } => commands::sweep(&commands::SweepArgs {
            config,
            snr_db: commands::parse_snr_list(&snr_db)?,
            fading,
            samples,
            seed,
            out,
            timing,
        }),
        Command::Optimize {
            config,
            snr_db,
            out,
            mc_validate,
            fading,
            samples,
            seed,
        } => commands::optimize(&commands::OptimizeArgs {
            config,
            snr_db,
            out,
            mc: mc_validate.then_some((fading, samples, seed)),
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
