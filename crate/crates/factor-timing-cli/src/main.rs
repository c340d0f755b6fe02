//! `ftime` — config-driven factor-timing pipeline.
//!
//! Subcommands: `ingest` (parse + merge + summarize), `run` (forecasts,
//! weights, backtests, tables), `report` (pretty-print a run directory).
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
//! failure.

mod config;
mod error;
mod output;
mod pipeline;

use clap::{Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ftime", version, about = "Deterministic factor-timing research pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and merge the source files, print a dataset summary.
    Ingest {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the aligned panel as aligned.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Run the full pipeline and write all tables and series.
    Run {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides the config; models with explicit seeds keep
        /// them).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the aligned panel as aligned.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Print the tables from a previous run directory.
    Report {
        /// Run directory containing summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest { config, out, dump } => {
            let cfg = config::load_config(&config, None, out)?;
            pipeline::cmd_ingest(&cfg, dump)
        }
        Command::Run { config, out, seed, dump } => {
            let cfg = config::load_config(&config, seed, out)?;
            pipeline::cmd_run(&cfg, dump)
        }
        Command::Report { out } => output::cmd_report(&out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print to stdout and succeed; real usage
            // errors exit 1.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
