//! Config-file-driven front end: run a single experiment, sweep the
//! stiffness parameter, recompute norms on stored snapshots, run the
//! property suite, or run the randomized appendix suites.
//!
//! Exit codes: 0 success, 1 configuration error, 2 compute error,
//! 3 verdict/property failure. Errors emit one machine-parsable line on
//! stderr: `stiffpress: error: <TAG>: <detail>`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;

#[derive(Parser)]
#[command(name = "stiffpress", version, about = "stiff-pressure diffusion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment description (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override a config key, e.g. --set time.t_end=2.0 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seed for randomized suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (or STIFFPRESS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and dump snapshots + diagnostics.
    Run(CommonArgs),
    /// Run a stiffness sweep with rate fits, residual trends, verdicts.
    Sweep(CommonArgs),
    /// Compute norms on stored snapshots.
    Metrics(CommonArgs),
    /// Run the seeded property suite.
    Validate(CommonArgs),
    /// Run the randomized transport-bound and 2D diagnostic suites.
    Appendix(CommonArgs),
}

fn configure_threads(requested: Option<usize>) {
    let n = requested.or_else(|| {
        std::env::var("STIFFPRESS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // ignore failure: the pool can only be built once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn load_config(args: &CommonArgs) -> Result<(config::ExperimentConfig, String), CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("this command needs --config PATH"))?;
    Ok(config::load(path, &args.set)?)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => {
            configure_threads(args.threads);
            let (cfg, canonical) = load_config(args)?;
            commands::cmd_run(&cfg, &canonical, &args.out)
        }
        Command::Sweep(args) => {
            configure_threads(args.threads);
            let (cfg, canonical) = load_config(args)?;
            commands::cmd_sweep(&cfg, &canonical, &args.out, args.seed)
        }
        Command::Metrics(args) => {
            configure_threads(args.threads);
            let (cfg, _) = load_config(args)?;
            commands::cmd_metrics(&cfg, &args.out)
        }
        Command::Validate(args) => {
            configure_threads(args.threads);
            let cfg = match &args.config {
                Some(_) => Some(load_config(args)?.0),
                None => None,
            };
            commands::cmd_validate(cfg.as_ref(), &args.out, args.seed)
        }
        Command::Appendix(args) => {
            configure_threads(args.threads);
            commands::cmd_appendix(&args.out, args.seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stiffpress: error: {}: {}", e.tag, e.detail);
            ExitCode::from(e.code as u8)
        }
    }
}
