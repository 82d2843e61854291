//! Command-line runner for the worklock experiment suite.
//!
//! Exit codes: 0 on success, 2 for config problems (missing file, unknown
//! keys, out-of-range values), 3 for runs that start but cannot finish
//! cleanly. Failed runs leave no output files behind.

mod config;
mod experiments;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Parser, Subcommand};

use config::CliError;

#[derive(Parser)]
#[command(
    name = "worklock",
    version,
    about = "work-from-coherence, homogenizer, and no-go experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file
    Run {
        /// Path to the config file
        config: PathBuf,
        /// Override a config entry, repeatable: --set key=value
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Override the RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for grid experiments (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List available experiments, parameters, and defaults
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            print!("{}", config::experiments_list_text());
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            set,
            seed,
            workers,
        } => match run(&config, &set, seed, workers) {
            Ok(report) => {
                print!("{report}");
                ExitCode::SUCCESS
            }
            Err(CliError::Config(e)) => {
                eprintln!("config error: {e:#}");
                ExitCode::from(2)
            }
            Err(CliError::Runtime(e)) => {
                eprintln!("run failed: {e:#}");
                ExitCode::from(3)
            }
        },
    }
}

fn run(
    path: &Path,
    overrides: &[String],
    seed: Option<u64>,
    workers: Option<usize>,
) -> config::Result<String> {
    let cfg = config::load(path, overrides, seed)?;
    if workers == Some(0) {
        return Err(CliError::Config(anyhow!("--workers must be at least 1")));
    }
    let workers = workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Runtime(anyhow!("cannot build worker pool: {e}")))?;

    let start = Instant::now();
    let rendered = pool.install(|| experiments::render(&cfg))?;
    let duration = start.elapsed();

    let (data_path, manifest_file) = manifest::write_run(&cfg, workers, duration, &rendered.data)?;
    Ok(format!(
        "{}: {} -> {}\nmanifest -> {}\n",
        cfg.experiment,
        rendered.summary,
        data_path.display(),
        manifest_file.display()
    ))
}
