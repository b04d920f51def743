mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Format};
use commands::Output;

/// Argument combinations that clap cannot express; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

const THREADS_VAR: &str = "RUMORLAB_THREADS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let output = commands::run(&cli.command, cli.format)?;
    let bytes = match (output, cli.format) {
        (Output::Json(v), Format::Json) => {
            let mut b = serde_json::to_vec_pretty(&v)?;
            b.push(b'\n');
            b
        }
        (Output::Csv(b), Format::Csv) => b,
        _ => unreachable!("commands honour the requested format"),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let threads: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")).into()),
    };
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring thread pool")?;
    Ok(())
}
