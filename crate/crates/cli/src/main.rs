//! Command-line pipeline for grouped time-series forecasting and
//! coherent reconciliation.

mod commands;
mod config;
mod error;
mod ingest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use groupcast::harness::Method;

use crate::commands::Scenario;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "groupcast",
    version,
    about = "Forecast grouped time series with SARIMA models and reconcile them coherently"
)]
struct Cli {
    /// Worker threads for per-node model fitting (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a sales CSV against the configured schema.
    IngestCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Select and fit a model for a single node; emit model.json, acf.csv, qq.csv.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Node key like "brand=b1,gender=F"; empty or "total" is the root.
        #[arg(long, default_value = "total")]
        node: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Constant added before a positive-data transform.
        #[arg(long)]
        shift: Option<f64>,
    },
    /// Fit one node and forecast h steps on the original scale.
    Forecast {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "total")]
        node: String,
        /// Overrides the configured split horizon.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        shift: Option<f64>,
    },
    /// Reconcile precomputed base forecasts.
    Reconcile {
        #[arg(long)]
        config: PathBuf,
        /// Base forecasts CSV (key columns + f1..fh; `method` column optional).
        #[arg(long)]
        base: PathBuf,
        /// Residuals CSV (column per node label), needed for WLS/MinT.
        #[arg(long)]
        residuals: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Comma-separated subset of baseline,bottom-up,ols,wls,mint-sample,mint-shrink.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Full run: ingest, model every node, reconcile, score the holdout.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        shift: Option<f64>,
    },
    /// Generate a synthetic sales CSV for the configured schema.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// demand (positive integer counts) or correlated (shared signal).
        #[arg(long, default_value = "demand")]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        weeks: Option<usize>,
        /// Mean level of each bottom series.
        #[arg(long, default_value_t = 40.0)]
        level: f64,
        /// Seasonal amplitude (log scale for demand, level scale for correlated).
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        /// Noise standard deviation (log scale for demand, level scale for correlated).
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
    },
}

fn parse_methods(raw: Option<Vec<String>>) -> Result<Option<Vec<Method>>, CliError> {
    match raw {
        None => Ok(None),
        Some(names) => {
            let mut methods = Vec::with_capacity(names.len());
            for name in names {
                methods.push(
                    name.parse::<Method>()
                        .map_err(|e| CliError::new(error::ErrorKind::Config, e.to_string()))?,
                );
            }
            Ok(Some(methods))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| CliError::new(error::ErrorKind::Config, e.to_string()))?;
    }
    match cli.command {
        Command::IngestCheck { config, data } => commands::ingest_check(&config, &data),
        Command::Fit {
            config,
            data,
            node,
            out_dir,
            shift,
        } => commands::fit(&config, &data, &node, &out_dir, shift),
        Command::Forecast {
            config,
            data,
            node,
            horizon,
            out_dir,
            shift,
        } => commands::forecast_cmd(&config, &data, &node, horizon, &out_dir, shift),
        Command::Reconcile {
            config,
            base,
            residuals,
            out_dir,
            methods,
        } => commands::reconcile_cmd(
            &config,
            &base,
            residuals.as_deref(),
            &out_dir,
            parse_methods(methods)?,
        ),
        Command::Evaluate {
            config,
            data,
            out_dir,
            methods,
            shift,
        } => commands::evaluate(&config, &data, &out_dir, parse_methods(methods)?, shift),
        Command::Simulate {
            config,
            out,
            scenario,
            seed,
            weeks,
            level,
            amplitude,
            noise,
        } => {
            let scenario: Scenario = scenario.parse()?;
            commands::simulate_cmd(&config, &out, scenario, seed, weeks, level, amplitude, noise)
        }
    }
}

fn main() -> ExitCode {
    // die quietly when stdout closes early (e.g. piped into `head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
