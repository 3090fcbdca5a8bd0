//! Thin batch CLI over the library: simulate | fit | compare | diagnose.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spectral_mcmc::cli::{FitMode, cmd_compare, cmd_diagnose, cmd_fit, cmd_simulate};
use spectral_mcmc::config::RunConfig;
use spectral_mcmc::error::Result;

#[derive(Parser)]
#[command(
    name = "spectral-mcmc",
    about = "Bayesian spectral inference for stationary multivariate time series",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Subsample,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Run-config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's worker-thread count.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from the configured true parameters.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit the configured model by MCMC.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// full-data Whittle MCMC or spectral subsampling MCMC.
        #[arg(long, value_enum, default_value = "subsample")]
        mode: ModeArg,
    },
    /// BIC comparison across the configured model list.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Chain efficiency, spectral summaries and predictive checks.
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
        /// One or two *_draws.csv files (full, subsample).
        #[arg(long, num_args = 1.., required = true)]
        draws: Vec<PathBuf>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        config.mcmc.seed = seed;
    }
    if let Some(threads) = common.threads {
        config.threads = Some(threads);
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    Ok(config)
}

fn run_in_pool<T>(threads: Option<usize>, work: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| {
                spectral_mcmc::error::Error::Config(format!("cannot build thread pool: {e}"))
            })?
            .install(work),
    }
}

fn dispatch(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Simulate { common } => {
            let config = load_config(&common)?;
            run_in_pool(config.threads, || cmd_simulate(&config))
        }
        Command::Fit { common, mode } => {
            let config = load_config(&common)?;
            let mode = match mode {
                ModeArg::Full => FitMode::Full,
                ModeArg::Subsample => FitMode::Subsample,
            };
            run_in_pool(config.threads, || cmd_fit(&config, mode))
        }
        Command::Compare { common } => {
            let config = load_config(&common)?;
            run_in_pool(config.threads, || cmd_compare(&config))
        }
        Command::Diagnose { common, draws } => {
            let config = load_config(&common)?;
            run_in_pool(config.threads, || cmd_diagnose(&config, &draws))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
