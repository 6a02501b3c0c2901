//! `odscope`: build scenario feeds, compute travel-time panels and analyse
//! them.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.

mod analyze;
mod args;
mod grid;
mod ingest;
mod manifest;
mod matrix;
mod monetise;
mod output;
mod scenario;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Command-line errors that are the caller's fault rather than the data's.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "odscope", version, about = "Scenario accessibility panels from GTFS timetables")]
struct Cli {
    /// Log progress (-v) or everything (-vv) to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and merge GTFS feeds into one canonical feed directory.
    Ingest(ingest::Args),
    /// Apply a scenario spec to a feed, writing a GTFS directory.
    Scenario(scenario::Args),
    /// Generate the sampling lattice for a boundary.
    Grid(grid::Args),
    /// Compute travel-time panel partitions for every scenario and slice.
    Matrix(matrix::Args),
    /// Summaries, curves, per-origin layers and reliability from a panel.
    Analyze(analyze::Args),
    /// Annual benefit, capital-recovery factor and break-even capital cost.
    Monetise(monetise::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match cli.command {
        Command::Ingest(a) => ingest::run(a),
        Command::Scenario(a) => scenario::run(a),
        Command::Grid(a) => grid::run(a),
        Command::Matrix(a) => matrix::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Monetise(a) => monetise::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
