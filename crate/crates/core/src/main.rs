//! Command-line front end: `slabwave <subcommand> [config]`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use slabwave::cli::{run, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Linear,
    Solve,
    SymbolScan,
    PgammaCheck,
    GammaSweep,
    Selftest,
}

/// Spectral solver and verification toolkit for free-boundary Navier–Stokes
/// waves in a slab.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// Subcommand to run.
    #[arg(value_enum)]
    command: Sub,
    /// Configuration file (`key=value` lines); defaults apply when omitted.
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the configuration.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Sub::Linear => Command::Linear,
        Sub::Solve => Command::Solve,
        Sub::SymbolScan => Command::SymbolScan,
        Sub::PgammaCheck => Command::PgammaCheck,
        Sub::GammaSweep => Command::GammaSweep,
        Sub::Selftest => Command::Selftest,
    };
    let config = match &args.config {
        Some(path) => RunConfig::from_file(path),
        None => Ok(RunConfig::default()),
    };
    let result = config.and_then(|mut c| {
        if let Some(dir) = args.output_dir {
            c.output_dir = dir;
        }
        run(command, &c)
    });
    match result {
        Ok(out) => {
            for line in out.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("E:{}: {} {e}", e.code(), command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
