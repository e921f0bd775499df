//! Configuration parsing and command execution behind the `purify` binary.
//!
//! Exit codes: `0` success, `1` the run could not start or hit a domain
//! error, `2` the run completed but its check failed, `3` a filesystem error.

mod config;
mod run;

pub use config::{parse_assignments, parse_config, Command, Problem, RunConfig, StrategySpec, KEYS};
pub use run::{execute, exit_code, RunOutcome, EXIT_CHECK_FAILED, EXIT_DOMAIN, EXIT_FILESYSTEM, EXIT_OK};

use std::path::PathBuf;

use clap::Parser;

#[derive(Debug, Parser)]
#[command(name = "purify", version, about = "Qubit purification by feedback: simulation, Bellman solvers and checks")]
struct Args {
    /// simulate | hit | verify | solve | compare | crossval | probe
    command: String,
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Further overrides as `key=value`
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_DOMAIN } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run_args(&args) {
        Ok(outcome) => outcome.code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_args(args: &Args) -> crate::Result<RunOutcome> {
    let command: Command = args.command.parse()?;
    let text = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    let mut overrides = Vec::new();
    for raw in &args.overrides {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| crate::Error::Config(format!("override '{raw}' is not key=value")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    let cfg = parse_config(command, text.as_deref(), &overrides)?;
    let outcome = execute(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&outcome.result)?);
    Ok(outcome)
}
