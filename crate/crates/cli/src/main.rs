use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pairstate::config::{Estimator, OutputFormat};
use pairstate::estimate::OptimizerConfig;
use pairstate::plausible::DEFAULT_CHUNK;
use pairstate::povm::PovmKind;
use pairstate_cli::{CliError, CommonOptions, PlausibleOptions, SimulateOptions};

#[derive(Parser)]
#[command(name = "pairstate", version, about = "Two-state source reconstruction from pair measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Output directory; results go to stdout when omitted (simulate
    /// falls back to the configured directory, then `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulated experiment described by a TOML file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Record per-estimator wall time (makes output non-reproducible).
        #[arg(long)]
        timings: bool,
        /// Also write every checkpoint's counts to `counts/`.
        #[arg(long)]
        write_counts: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct the source from a counts file (`outcome,count`).
    Estimate {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        povm: PovmKind,
        /// Repeatable; defaults to all estimators.
        #[arg(long = "estimator")]
        estimators: Vec<Estimator>,
        #[command(flatten)]
        common: Common,
    },
    /// Plausible region statistics for a counts file.
    Plausible {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        povm: PovmKind,
        /// Prior sample size M.
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_CHUNK)]
        chunk_size: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Asymptotic comparison series from a `simulate` result table.
    Asymptotics {
        #[arg(long)]
        table: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Internal consistency checks.
    Selftest {
        #[command(flatten)]
        common: Common,
    },
}

fn setup(c: &Common) -> Result<CommonOptions, CliError> {
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::Usage(anyhow::anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.into()))?;
    }
    Ok(CommonOptions { out: c.out.clone(), format: c.format, seed: c.seed, verbose: c.verbose })
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, timings, write_counts, common } => {
            let opts = setup(&common)?;
            let out = pairstate_cli::cmd_simulate(&config, &opts, SimulateOptions { timings, write_counts })?;
            if opts.verbose {
                eprintln!("{}", out.display());
            }
            Ok(())
        }
        Command::Estimate { counts, povm, estimators, common } => {
            let opts = setup(&common)?;
            let estimators = if estimators.is_empty() { vec![Estimator::LiXi, Estimator::LiMoments, Estimator::Ml] } else { estimators };
            pairstate_cli::cmd_estimate(&counts, povm, &estimators, &OptimizerConfig::default(), &opts)
        }
        Command::Plausible { counts, povm, samples, chunk_size, common } => {
            let opts = setup(&common)?;
            pairstate_cli::cmd_plausible(&counts, povm, &OptimizerConfig::default(), PlausibleOptions { samples, chunk_size }, &opts)
        }
        Command::Asymptotics { table, common } => {
            let opts = setup(&common)?;
            pairstate_cli::cmd_asymptotics(&table, &opts)
        }
        Command::Selftest { common } => {
            let opts = setup(&common)?;
            pairstate_cli::cmd_selftest(&opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
