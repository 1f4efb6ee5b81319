mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_metric_list, RunConfig};
use error::{CliError, CliResult};

/// Ego-network dynamics pipeline: turn call logs into interval networks,
/// then measure signature persistence, alter turnover, and rank dynamics
/// across personality subgroups.
#[derive(Parser)]
#[command(name = "egodyn", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw call log into interval networks and a canonical snapshot.
    Ingest(CommonArgs),
    /// Run the analyses on an ingested snapshot.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic dataset with known ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the key=value run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated subset of persistence,turnover,netsize,rankdyn.
    #[arg(long)]
    metrics: Option<String>,
    /// Restrict subgroup analyses to one trait.
    #[arg(long = "trait")]
    trait_name: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(workers) = common.workers {
        config.workers = workers;
    }
    Ok(config)
}

fn init_worker_pool(config: &RunConfig) -> CliResult<()> {
    if config.workers == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn dispatch() -> CliResult<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest(args) => {
            let config = load_config(&args)?;
            init_worker_pool(&config)?;
            commands::ingest::run(&config)
        }
        Command::Analyze(args) => {
            let mut config = load_config(&args.common)?;
            if let Some(metrics) = &args.metrics {
                config.metrics = parse_metric_list(metrics)
                    .map_err(|e| CliError::Config(format!("--metrics: {e}")))?;
            }
            if let Some(name) = &args.trait_name {
                config.focus_trait = Some(
                    name.parse()
                        .map_err(|e: String| CliError::Config(format!("--trait: {e}")))?,
                );
            }
            init_worker_pool(&config)?;
            commands::analyze::run(&config)
        }
        Command::Synth(args) => {
            let mut config = load_config(&args.common)?;
            if let Some(seed) = args.seed {
                config.generator.seed = seed;
            }
            init_worker_pool(&config)?;
            commands::synth::run(&config)
        }
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
