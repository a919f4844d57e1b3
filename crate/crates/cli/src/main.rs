//! `signlab` command-line front-end.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;

use config::{Command, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "signlab", version, about = "Sign patterns, log averages and Fourier-uniformity statistics")]
struct Cli {
    /// Replay a config echo (`<report>.config.json`) instead of a subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, env = "SIGNLAB_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn resolve(cli: Cli) -> Result<RunConfig> {
    let mut config = match (cli.config, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text)
                .with_context(|| format!("{} is not a run config", path.display()))?
        }
        (None, Some(command)) => RunConfig {
            command,
            threads: None,
        },
        (Some(_), Some(_)) => bail!("--config replaces the subcommand; give one or the other"),
        (None, None) => bail!("no subcommand given; see --help"),
    };
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    if config.threads == Some(0) {
        bail!("--threads must be positive");
    }
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    config.threads = Some(rayon::current_num_threads());
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run::run(&config) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(failed) = e.downcast_ref::<run::BatchFailed>() {
                if let Err(w) = run::emit_failed_batch(&config, failed) {
                    eprintln!("error: {w:#}");
                }
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
