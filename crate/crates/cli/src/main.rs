//! `emh-audit`: batch front end for the efficiency audit.
//!
//! Exit codes: 0 success, 1 output or other failure, 2 usage or invalid
//! configuration, 3 input data could not be read or validated, 4 a
//! statistical computation failed.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{FileConfig, Format, RunConfig};

/// Marks an error as coming from input data.
#[derive(Debug)]
pub struct Input(pub String);

impl fmt::Display for Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Marks an invalid configuration.
#[derive(Debug)]
struct BadConfig;

impl fmt::Display for BadConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid configuration")
    }
}

#[derive(Debug, Parser)]
#[command(name = "emh-audit", version, about = "Weak-form market efficiency audit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampling and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; tables go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Variance-ratio periods, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    periods: Option<Vec<usize>>,
    /// Significance levels for simulation studies, strictly decreasing.
    #[arg(long, global = true, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Sampling margin of error d.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Confidence level of the proportion intervals.
    #[arg(long, global = true)]
    confidence: Option<f64>,
    /// Directory holding `<TICKER>.csv` price files.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Sampling frame CSV (`ticker,exchange,sector`).
    #[arg(long, global = true)]
    frame: Option<PathBuf>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a price CSV into a `date,r` log-return CSV.
    Returns {
        prices: PathBuf,
        /// Ticker label; defaults to the file stem.
        #[arg(long)]
        ticker: Option<String>,
    },
    /// Runs tests on one or more price files.
    Runs {
        #[arg(required = true)]
        prices: Vec<PathBuf>,
    },
    /// Variance-ratio tests on one or more price files.
    Vr {
        #[arg(required = true)]
        prices: Vec<PathBuf>,
    },
    /// Sample size, stratified allocation and drawn tickers.
    PlanSample,
    /// Confidence interval for a proportion with finite population correction.
    Ci {
        #[arg(long)]
        successes: usize,
        #[arg(long)]
        sample_size: usize,
        #[arg(long)]
        population: usize,
    },
    /// Full audit over the sampled stocks, or a replay of recorded verdicts.
    Audit {
        /// CSV with a `ticker` column listing the stocks to analyse instead of
        /// drawing a sample.
        #[arg(long, conflicts_with = "replay")]
        sample: Option<PathBuf>,
        /// Price CSV of a benchmark index reported alongside the stocks.
        #[arg(long, conflicts_with = "replay")]
        index: Option<PathBuf>,
        /// Recorded verdict CSV to aggregate instead of analysing prices.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Empirical size of the tests on simulated series.
    Simulate {
        #[arg(long, default_value_t = 1000)]
        replications: usize,
        #[arg(long, default_value_t = 2659)]
        length: usize,
        /// `iid`, `ar1:RHO` or `regime:LOW_SD,HIGH_SD,SWITCH_PROB`.
        #[arg(long, default_value = "iid")]
        generator: String,
        /// Tests to run: runs-mean, runs-updown, vr:Q, joint.
        #[arg(long, value_delimiter = ',')]
        tests: Option<Vec<String>>,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> FileConfig {
        FileConfig {
            data_dir: self.data_dir.clone(),
            frame: self.frame.clone(),
            periods: self.periods.clone(),
            alphas: self.alphas.clone(),
            margin: self.margin,
            confidence: self.confidence,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
            jobs: self.jobs,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let config = RunConfig::resolve(file, cli.global.overrides()).map_err(|e| e.context(BadConfig))?;
    commands::dispatch(cli.command, &config)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<emh_core::Error>());
    if err.downcast_ref::<BadConfig>().is_some() {
        2
    } else if err.downcast_ref::<Input>().is_some() || core.is_some_and(emh_core::Error::is_ingestion) {
        3
    } else if core.is_some() {
        4
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
