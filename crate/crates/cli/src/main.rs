//! `hybridopt`: runs one experiment described by a TOML or JSON config.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible, 4 numerical
//! failure. Failures print a JSON error record on stderr.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::commands::Output;
use crate::config::ExperimentConfig;
use crate::exit::Failure;

#[derive(Debug, Parser)]
#[command(name = "hybridopt", version, about = "Hybrid system simulation and optimal control experiments")]
struct Args {
    /// Experiment config (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix; overrides `out` in the config.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for sweeps and reach samples (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Progress messages on stderr.
    #[arg(long)]
    verbose: bool,
}

fn run(args: &Args) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = ExperimentConfig::load(&args.config)?;
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::numeric(format!("thread pool: {e}")))?;
    }
    let prefix = args.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| "hybridopt".to_string());
    let mut out = Output::new(&prefix);
    let report = commands::run(&cfg, &mut out, args.verbose)?;
    commands::write_manifest(&mut out, &cfg, &report.summary, start.elapsed(), rayon::current_num_threads())?;
    if args.verbose {
        for p in &out.written {
            eprintln!("[hybridopt] wrote {}", p.display());
        }
    }
    report.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.record());
            ExitCode::from(f.code as u8)
        }
    }
}
