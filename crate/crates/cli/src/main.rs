//! `inar`: simulate, fit and study cumulative INAR(inf) count processes.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{EstimateArgs, McArgs, NormalityArgs, SimulateArgs};
use error::CliResult;

#[derive(Parser)]
#[command(
    name = "inar",
    version,
    about = "Simulate, fit and study cumulative INAR(inf) count processes"
)]
struct Cli {
    /// Worker threads for Monte Carlo replications (0 = all cores).
    #[arg(long, global = true, env = "INAR_THREADS")]
    threads: Option<usize>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it as `n,x` CSV.
    Simulate(SimulateCmd),
    /// Fit the least-squares estimator to a path CSV.
    Estimate(EstimateCmd),
    /// Run a Monte Carlo study from a config file.
    Mc(McCmd),
    /// Normality tests, Q-Q and histogram data for a samples CSV.
    Normality(NormalityCmd),
}

#[derive(Args)]
struct SimulateCmd {
    /// JSON config supplying nu, kernel, T and seed; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nu: Option<f64>,
    /// `none`, `geometric:<ratio>` or `lags:[a1,a2,...]`.
    #[arg(long)]
    kernel: Option<String>,
    /// Path length.
    #[arg(long = "T")]
    len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random stream within the seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output file (default: <out-dir>/path.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateCmd {
    /// Path CSV with header `n,x`.
    #[arg(long)]
    path: PathBuf,
    /// Lag order.
    #[arg(long, default_value_t = inar_core::estimate::DEFAULT_LAG_ORDER)]
    p: usize,
    /// Add sandwich confidence intervals at this level, e.g. 0.95.
    #[arg(long)]
    ci: Option<f64>,
    /// Output file (default: <out-dir>/estimate.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McCmd {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip writing samples.csv.
    #[arg(long)]
    no_samples: bool,
}

#[derive(Args)]
struct NormalityCmd {
    /// Samples CSV as written by `mc`.
    #[arg(long)]
    samples: PathBuf,
    /// Comma-separated column names (default: first three).
    #[arg(long, value_delimiter = ',')]
    components: Option<Vec<String>>,
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    if let Some(threads) = cli.threads {
        // only fails if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let out_dir = cli.out_dir.as_path();
    match cli.command {
        Command::Simulate(c) => commands::simulate(
            SimulateArgs {
                config: c.config,
                nu: c.nu,
                kernel: c.kernel,
                len: c.len,
                seed: c.seed,
                stream: c.stream,
                out: c.out,
            },
            out_dir,
        ),
        Command::Estimate(c) => commands::estimate(
            EstimateArgs {
                path: c.path,
                p: c.p,
                ci: c.ci,
                out: c.out,
            },
            out_dir,
        ),
        Command::Mc(c) => commands::monte_carlo(
            McArgs {
                config: c.config,
                seed: c.seed,
                samples: !c.no_samples,
            },
            out_dir,
        ),
        Command::Normality(c) => commands::normality(
            NormalityArgs {
                samples: c.samples,
                components: c.components,
            },
            out_dir,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            println!("{}", written.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(1)
        }
    }
}
