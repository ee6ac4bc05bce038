use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fbmlab_cli::config::Experiment;
use fbmlab_cli::manifest::Status;

#[derive(Parser)]
#[command(name = "fbmlab", version, about = "Experiments on fBm-driven SDEs with distributional drift")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the experiment a config describes.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// List experiment names.
    ListExperiments,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn main_inner(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.verb {
        Verb::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<20} {}", e.name(), e.summary());
            }
            Ok(Status::Success)
        }
        Verb::Validate { config } => {
            let cfg = fbmlab_cli::load(&read(&config)?, None)?;
            println!("ok: {} experiment, config hash {}", cfg.experiment, fbmlab_cli::config_hash(&cfg)?);
            Ok(Status::Success)
        }
        Verb::Run { config, out, seed_override } => {
            let cfg = fbmlab_cli::load(&read(&config)?, seed_override)?;
            let root = std::env::var_os(fbmlab_cli::OUT_ROOT_VAR).map(PathBuf::from);
            let dir = fbmlab_cli::output_dir(&cfg, out.as_deref(), root.as_deref());
            let manifest = fbmlab_cli::run(&cfg, &dir)?;
            for (k, v) in &manifest.metrics {
                println!("{k} = {v}");
            }
            match manifest.status {
                Status::Success => println!("ok: wrote {} files to {}", manifest.files.len(), dir.display()),
                Status::ThresholdFailure => eprintln!("threshold failure: {}", manifest.failed_thresholds.join(", ")),
                Status::Error => eprintln!("error: {}", manifest.error.as_deref().unwrap_or("unknown")),
            }
            Ok(manifest.status)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(status) => ExitCode::from(fbmlab_cli::exit_code(status) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
