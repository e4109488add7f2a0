//! Batch runner. One JSON config in, one versioned JSON report out;
//! exit code 0 when the run's certificate holds, 2 when a check fails
//! with a report, 1 on any error.

mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::ensure;
use clap::Parser;
use sha2::{Digest, Sha256};

const SCHEMA: &str = "reebpa/1";

#[derive(Parser)]
#[command(name = "reebpa", version, about = "pseudo-Anosov Reeb laboratory batch runner")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Data-parallel worker count. Falls back to the config "workers" key,
    /// then REEBPA_WORKERS, then all logical cores.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Recorded in the report envelope; reserved for seeded searches.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(serde::Serialize)]
struct Report {
    schema: &'static str,
    tool_version: &'static str,
    cmd: String,
    config_sha256: String,
    seed: u64,
    pass: bool,
    result: serde_json::Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let loaded = config::load(&cli.config)?;
    if let Some(n) = cli.workers.or(loaded.workers).or(env_workers()?) {
        ensure!(n >= 1, "worker count must be at least 1");
        // The report bytes must not depend on the pool size, so a failure
        // to resize (pool already running) is not an error.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (pass, result) = run::dispatch(&loaded.command)?;
    let digest = Sha256::digest(&loaded.raw);
    let report = Report {
        schema: SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        cmd: loaded.cmd,
        config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        seed: cli.seed.unwrap_or(0),
        pass,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(pass)
}

fn env_workers() -> anyhow::Result<Option<usize>> {
    match std::env::var("REEBPA_WORKERS") {
        Ok(s) => {
            let n = s.trim().parse().map_err(|_| {
                anyhow::anyhow!("REEBPA_WORKERS must be a positive integer, got {s:?}")
            })?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}
