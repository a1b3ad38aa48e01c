//! `ladder` — tail probabilities of ladder epochs under small drift.
//!
//! The binary fronts the library with batch-friendly subcommands: exact
//! tables with cross-route consistency gates, Monte Carlo estimates,
//! transition and regime scans, a one-shot formula recommender, the
//! built-in verification suite, and tail-bound calibration.
//!
//! Exit codes: 0 success, 2 consistency failure, 3 configuration error.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Ladder-epoch tail calculator for random walks with small negative
/// drift: exact tables, simulation, and asymptotic predictors, with
/// cross-route consistency checking.
#[derive(Parser)]
#[command(name = "ladder", version, about)]
struct Cli {
    /// JSON config file supplying defaults; flags override its fields
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: $LADDER_THREADS, else one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact survival table with cross-route consistency checks
    Exact(commands::ExactArgs),
    /// Monte Carlo tail or moment estimate, emitted as a JSON record
    Mc(commands::McArgs),
    /// Scan the small-drift correction ratio against its predicted limit
    TransitionScan(commands::TransitionArgs),
    /// Classify the operative regime across a horizon grid
    RegimeScan(commands::RegimeScanArgs),
    /// Recommend a formula for one (model, n) and report the rivals
    Decide(commands::DecideArgs),
    /// Run the built-in verification suite and report each check
    Verify,
    /// Find the smallest constant keeping the two-piece tail bound safe
    CalibrateFn(commands::CalibrateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let consistency = e
                .chain()
                .any(|c| c.downcast_ref::<output::Inconsistent>().is_some());
            ExitCode::from(if consistency { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = config::load(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads).or_else(|| {
        std::env::var("LADDER_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(k) = threads {
        // Ignore the error from double initialization: the pool can be
        // configured only once per process, which is exactly once here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    match &cli.command {
        Command::Exact(args) => commands::exact(args, &file),
        Command::Mc(args) => commands::mc(args, &file),
        Command::TransitionScan(args) => commands::transition_scan(args, &file),
        Command::RegimeScan(args) => commands::regime_scan(args, &file),
        Command::Decide(args) => commands::decide(args, &file),
        Command::Verify => commands::verify(),
        Command::CalibrateFn(args) => commands::calibrate_fn(args, &file),
    }
}
