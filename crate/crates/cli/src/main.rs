use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod manifest;

use config::{Flags, RunConfig, Verb};
use manifest::Run;

#[derive(Parser)]
#[command(name = "heightlab", version, about = "Counting and discrepancy runs for S-integral points of SL2")]
struct Cli {
    #[command(subcommand)]
    verb: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Haar normalization against SL2(Z) and tabulate ball volumes
    Calibrate(Flags),
    /// Exact p-adic sphere and ball volumes up to --max-height
    Volumes(Flags),
    /// All points of one height shell in a ball and congruence class
    Enumerate(Flags),
    /// N_T(x) at --center
    Count(Flags),
    /// N_T(x) against V_T for Haar-random x
    Schmidt(Flags),
    /// Mean-square discrepancy, or the trajectory at --center
    Discrepancy(Flags),
    /// Small-ball counts over radii and sample points
    Sweep(Flags),
    /// Oracle suite; nonzero exit on any mismatch
    Selftest(Flags),
}

fn run(verb: Verb, flags: &Flags) -> anyhow::Result<bool> {
    let cfg = RunConfig::resolve(verb, flags)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut run = Run::start(cfg)?;
    let outcome = match verb {
        Verb::Calibrate => commands::calibrate(&mut run),
        Verb::Volumes => commands::volumes(&mut run),
        Verb::Enumerate => commands::enumerate(&mut run),
        Verb::Count => commands::count(&mut run),
        Verb::Schmidt => commands::schmidt(&mut run),
        Verb::Discrepancy => commands::discrepancy(&mut run),
        Verb::Sweep => commands::sweep(&mut run),
        Verb::Selftest => commands::selftest(&mut run),
    }?;
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "run_id": run.run_id, "summary": outcome.summary }))?);
    run.finish(outcome.summary)?;
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (verb, flags) = match &cli.verb {
        Command::Calibrate(f) => (Verb::Calibrate, f),
        Command::Volumes(f) => (Verb::Volumes, f),
        Command::Enumerate(f) => (Verb::Enumerate, f),
        Command::Count(f) => (Verb::Count, f),
        Command::Schmidt(f) => (Verb::Schmidt, f),
        Command::Discrepancy(f) => (Verb::Discrepancy, f),
        Command::Sweep(f) => (Verb::Sweep, f),
        Command::Selftest(f) => (Verb::Selftest, f),
    };
    match run(verb, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: oracle mismatch");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
