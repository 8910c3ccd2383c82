//! `memlab run <config.json> [--override k=v]... [--workers n]`
//!
//! Exit status: 0 on success, 1 on an invalid config, 2 on a runtime or
//! output failure.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "memlab",
    version,
    about = "Thermal memory stability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Replace a config value, e.g. `params.betas=[0.5,1.0]`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads; results do not depend on it.
        #[arg(long, env = "MEMLAB_WORKERS")]
        workers: Option<usize>,
    },
}

fn run(config_path: &PathBuf, overrides: &[String], workers: Option<usize>) -> CliResult<()> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = config::parse_config(&text, overrides)?;
    experiments::validate(&cfg.params)?;

    let workers = workers
        .or(cfg.workers)
        .unwrap_or_else(rayon::current_num_threads);
    if workers == 0 {
        return Err(CliError::Config("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let table = pool.install(|| experiments::run(&cfg.params, cfg.seed))?;
    let wall = clock.elapsed().as_secs_f64();

    output::write_csv(&cfg.output, &table)?;
    let manifest_path = output::manifest_path(&cfg.output);
    output::write_manifest(
        &manifest_path,
        &output::Manifest {
            config: &cfg.echo,
            seed: cfg.seed,
            workers,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_seconds: started,
            wall_time_seconds: wall,
            rows: table.rows.len(),
            csv: &cfg.output,
        },
    )?;

    println!("{}", table.header.join("\t"));
    for row in &table.rows {
        println!("{}", row.join("\t"));
    }
    println!(
        "wrote {} rows to {} in {:.2}s (workers: {workers})",
        table.rows.len(),
        cfg.output.display(),
        wall
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            overrides,
            workers,
        } => run(config, overrides, *workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
