//! `murmur`: compute Frobenius-trace data for families of elliptic curves,
//! average it by rank, classify ranks by trace sums, and evaluate the
//! density profile that explains the family-average oscillations.
//!
//! Exit codes: 0 on success, 2 on validation errors (bad flags, bad config,
//! bad input data), 3 on numerical failures (a search or solve that cannot
//! reach the requested tolerance).

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{RawOptions, RunConfig};

#[derive(Parser)]
#[command(
    name = "murmur",
    version,
    about = "Frobenius traces, rank-family averages, and density profiles for elliptic curves"
)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalOpts {
    /// TOML config file of key = value pairs; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Curve dataset (CSV: label,a1,a2,a3,a4,a6,conductor,rank)
    #[arg(long, global = true, value_name = "FILE")]
    dataset: Option<PathBuf>,
    /// Conductor window LO:HI applied to the dataset
    #[arg(long, global = true, value_name = "LO:HI")]
    window: Option<String>,
    /// Prime limit for sieving and trace computation
    #[arg(long, global = true, value_name = "LIMIT")]
    primes: Option<u64>,
    /// B-grid spec GEOM:START:RATIO, capped at the prime limit
    #[arg(long, global = true, value_name = "GEOM:START:RATIO")]
    grid: Option<String>,
    /// Prime truncation of the Euler products
    #[arg(long, global = true, value_name = "P")]
    trunc: Option<u64>,
    /// Tolerance for maxima searches and root solves
    #[arg(long, global = true, value_name = "T")]
    tol: Option<f64>,
    /// Worker threads (default: all cores); outputs do not depend on this
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,
    /// Output directory for emitted files
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overwrite existing output files
    #[arg(long, global = true)]
    force: bool,
}

impl GlobalOpts {
    fn into_raw(self) -> RawOptions {
        RawOptions {
            dataset: self.dataset,
            window: self.window,
            primes: self.primes,
            grid: self.grid,
            trunc: self.trunc,
            tol: self.tol,
            workers: self.workers,
            out: self.out,
            force: self.force,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the good-reduction traces (p, a_p) of one curve
    Ap {
        /// Curve coefficients a1,a2,a3,a4,a6
        curve: String,
    },
    /// Print the running trace sum S(B) of one curve on the B-grid
    Trace {
        /// Curve coefficients a1,a2,a3,a4,a6
        curve: String,
    },
    /// Emit per-rank family averages of S(B) with confidence bands (two CSV files)
    Figure1,
    /// Emit per-prime trace averages by rank class (CSV)
    Figure2,
    /// Emit the exact density profile swept over x at one scale (CSV)
    Figure3 {
        /// Conductor scale of the sweep
        #[arg(default_value_t = 100_000.0)]
        n: f64,
    },
    /// Classify ranks by the optimal score cutoff at each trace bound
    Classify {
        /// Trace bounds B to classify at
        #[arg(default_values_t = [3200.0])]
        bounds: Vec<f64>,
    },
    /// Emit the main-term maxima table across the five reference scales (TSV)
    Table1,
    /// Print the Euler-product constants and the derived bounds
    Constants,
    /// Print the main-term maxima report for one scale
    Maxima {
        /// Conductor scale of the model
        #[arg(default_value_t = 100_000.0)]
        n: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        let numerical = err
            .chain()
            .any(|cause| {
                cause
                    .downcast_ref::<murmur_core::Error>()
                    .is_some_and(murmur_core::Error::is_numerical)
            });
        std::process::exit(if numerical { 3 } else { 2 });
    }
}

fn run(cli: Cli) -> Result<()> {
    let config_file = cli.opts.config.clone();
    let config: RunConfig = cli.opts.into_raw().resolve(config_file.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .context("cannot build worker pool")?;
    pool.install(|| match &cli.command {
        Command::Ap { curve } => commands::cmd_ap(&config, curve),
        Command::Trace { curve } => commands::cmd_trace(&config, curve),
        Command::Figure1 => commands::cmd_figure1(&config),
        Command::Figure2 => commands::cmd_figure2(&config),
        Command::Figure3 { n } => commands::cmd_figure3(&config, *n),
        Command::Classify { bounds } => commands::cmd_classify(&config, bounds),
        Command::Table1 => commands::cmd_table1(&config),
        Command::Constants => commands::cmd_constants(&config),
        Command::Maxima { n } => commands::cmd_maxima(&config, *n),
    })
}
