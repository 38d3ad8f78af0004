//! `ridehail`: generate scenarios, run simulations and experiment series,
//! and turn the outputs into KPI, validation and extrapolation reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 batch finished with failed runs.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use ridehail::sim::Strategy;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ridehail", version, about = "Ride-hailing fleet simulation and rebalancing analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// JSON settings file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Logbook variation / simulation seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "return|wait|hotspot")]
    pub strategy: Option<Strategy>,
    /// Concurrent runs in a batch.
    #[arg(long, global = true, value_name = "N")]
    pub parallel: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic grid network (mini-berlin by default) as JSON.
    GenNetwork(commands::GenNetworkArgs),
    /// Synthesize operator demand (a logbook of a whole period) as CSV.
    GenDemand(commands::GenDemandArgs),
    /// Sample one synthetic day for the fleet from the source logbook.
    GenLogbook(commands::GenLogbookArgs),
    /// Cluster pick-up locations into hotspots.
    DeriveHotspots(commands::DeriveHotspotsArgs),
    /// Simulate one day under one strategy.
    Simulate(commands::SimulateArgs),
    /// Run days x strategies x seeds, in parallel, and merge the KPIs.
    Batch(commands::BatchArgs),
    /// Merge per-run KPI files into a KPI table.
    Kpi(commands::KpiArgs),
    /// Replay a logbook and compare simulated with logged times.
    Validate(commands::ValidateArgs),
    /// Scale mileage to a year and estimate CO2.
    Extrapolate(commands::ExtrapolateArgs),
    /// Static mileage and follow-up analysis of a logbook.
    Analyze(commands::AnalyzeArgs),
}

/// Wrong or missing arguments; exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Some runs of a batch failed; exit code 3.
#[derive(Debug)]
pub struct PartialFailure {
    pub failed: usize,
    pub total: usize,
}

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} of {} runs failed", self.failed, self.total)
    }
}

impl std::error::Error for PartialFailure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        1
    } else if e.downcast_ref::<PartialFailure>().is_some() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
