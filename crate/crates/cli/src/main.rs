//! `signret`: frame checks, measurement simulation, recovery and the
//! experiments of the sign-retrieval library.
//!
//! Exit codes: 0 success, 1 I/O error, 2 invalid input or failed
//! validation, 3 recovery failure, 64 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Debug, Parser)]
#[command(name = "signret", version, about = "Sign retrieval from unsigned frame samples")]
pub struct Cli {
    /// TOML configuration; see the crate docs for keys and defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Overrides `frame.alpha` (default 0.1875).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Overrides `counterexample.s` (default 0.5).
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Directory for artifacts and the JSON summary.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frame bounds, overlap graph, descriptor and per-band filters.
    FrameCheck,
    /// Random band-limited signal and its unsigned frame samples.
    Sample,
    /// Recovers a signal from a measurement file.
    Recover {
        /// Measurement set written by `sample`.
        #[arg(long)]
        input: PathBuf,
        /// Signal (SGNB) to compare the output against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Pair of signals with equal magnitudes on a sub-critical lattice.
    Counterexample,
    /// Recovery error under noisy magnitudes.
    StabilityProbe,
    /// Oversampling factors of the Meyer and curvelet lattices.
    Redundancy,
}

/// A check that ran to completion and failed.
#[derive(Debug, thiserror::Error)]
#[error("validation failed: {0}")]
pub struct ValidationFailed(pub String);

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<sign_retrieval::Error>() {
        return match err.root() {
            _ if err.is_recovery_failure() => 3,
            sign_retrieval::Error::Io(_) => 1,
            _ => 2,
        };
    }
    if e.is::<ValidationFailed>() || e.is::<toml::de::Error>() || e.is::<serde_json::Error>() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let run = || -> anyhow::Result<()> {
        let mut cfg = Config::load(cli.config.as_deref())?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(alpha) = cli.alpha {
            cfg.frame.alpha = alpha;
        }
        if let Some(s) = cli.s {
            cfg.counterexample.s = s;
        }
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global()?;
        std::fs::create_dir_all(&cli.out_dir)?;
        commands::run(&cli.command, &cfg, &cli.out_dir)
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
