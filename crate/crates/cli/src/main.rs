//! `nilpotent-atlas`: classification, portraits, maps and verification suites.
//!
//! Exit codes: 0 success, 1 failed checks or i/o, 2 invalid input, 3 numerical failure.

mod classify;
mod config;
mod error;
mod grid;
mod output;
mod portrait;
mod scan;
mod svg;
mod verify;

use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};
use error::{CliResult, Failure};

#[derive(Parser, Debug)]
#[command(
    name = "nilpotent-atlas",
    version,
    about = "Quadratic fields with a nilpotent saddle at infinity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normal form and invariant parabola of a quadratic system
    Classify(Flags),
    /// Phase portrait of the rescaled family on the disc (SVG, orbit CSV, JSON)
    Portrait(Flags),
    /// Separatrix signatures along the slice mu1bar = 0
    Sweep(Flags),
    /// Run a verification suite and write a JSON report
    Verify(Flags),
    /// Cycle scan over a (B, delta) grid along the invariant-parabola family
    Scan(Flags),
    /// Return map on the section through the parabola vertex
    Returnmap(Flags),
}

fn execute(cli: Cli) -> CliResult<()> {
    let (name, flags) = match &cli.command {
        Command::Classify(f) => ("classify", f),
        Command::Portrait(f) => ("portrait", f),
        Command::Sweep(f) => ("sweep", f),
        Command::Verify(f) => ("verify", f),
        Command::Scan(f) => ("scan", f),
        Command::Returnmap(f) => ("returnmap", f),
    };
    let cfg = RunConfig::resolve(name, flags)?;
    let artifacts = match cli.command {
        Command::Classify(_) => classify::run(&cfg)?,
        Command::Portrait(_) => portrait::run(&cfg)?,
        Command::Sweep(_) => portrait::run_sweep(&cfg)?,
        Command::Scan(_) => scan::run_scan(&cfg)?,
        Command::Returnmap(_) => scan::run_returnmap(&cfg)?,
        Command::Verify(_) => {
            let (artifacts, pass) = verify::run(&cfg)?;
            output::emit(&cfg, &artifacts)?;
            return if pass {
                Ok(())
            } else {
                Err(Failure::Checks(format!(
                    "suite {} has failing checks",
                    cfg.suite.map(|s| s.name()).unwrap_or("")
                )))
            };
        }
    };
    output::emit(&cfg, &artifacts)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
