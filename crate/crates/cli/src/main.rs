//! `xsense`: run experiments described by JSON configs and emit CSV/JSON tables.

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::Value;

use config::{apply_overrides, resolve_seed, Command, ExperimentConfig, SEED_ENV};

#[derive(Debug, Parser)]
#[command(name = "xsense", version, about = "Noise and exclusion sensitivity experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config and the XSENSE_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (default: the config's `output.dir`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config field, e.g. `--set samples=1000 --set function.n=9`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, u64)> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Value::Object(Default::default()),
    };
    apply_overrides(&mut doc, &cli.overrides)?;
    let mut config = ExperimentConfig::from_value(doc)?;
    let env = std::env::var(SEED_ENV).ok();
    let seed = resolve_seed(cli.seed, config.seed, env.as_deref())?;
    config.seed = Some(seed);
    if let Some(out) = &cli.out {
        config.output.dir = Some(out.clone());
    }
    Ok((config, seed))
}

fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let plan = match load(&cli).and_then(|(config, seed)| run::validate(cli.command, config, seed)) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("xsense: invalid configuration: {e:#}");
            return ExitCode::from(2);
        }
    };
    if cli.workers == Some(0) {
        eprintln!("xsense: --workers must be at least 1");
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("xsense: cannot start workers: {e}");
            return ExitCode::from(2);
        }
    };
    let outputs = match pool.install(|| plan.execute()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("xsense: {e:#}");
            return ExitCode::from(1);
        }
    };
    for line in &outputs.summary {
        println!("{line}");
    }
    let dir = plan.output_dir().unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = write_all(&dir, &outputs.files) {
        eprintln!("xsense: {e:#}");
        return ExitCode::from(1);
    }
    println!("config_hash={} seed={}", plan.provenance().config_hash, plan.provenance().seed);
    if outputs.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
