//! `nvm`: command-line front end.
//!
//! Exit codes: 0 success, 1 `verify` found failing criteria, 2 invalid
//! input, 3 capacity, numeric or I/O failure.

mod commands;
mod settings;

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nvm_core::{Error, Result};

use commands::Run;
use settings::Settings;

#[derive(Parser)]
#[command(
    name = "nvm",
    version,
    about = "Noisy voter model observed at one vertex"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and write its edge list.
    Gen(Settings),
    /// Simulate the root's observation trace.
    Simulate(Settings),
    /// Repetition statistics of a trace (simulated or read from disk).
    Stats(Settings),
    /// Exact or Monte Carlo p_d for one graph.
    Oracle(Settings),
    /// Test whether two rooted graphs give different statistics.
    Distinguish(Settings),
    /// p_d of two graphs across an ε grid, flagging sign changes.
    Sweep(Settings),
    /// Run the acceptance suite.
    Verify(Settings),
}

type Handler = fn(&mut Settings) -> Result<Run>;

impl Command {
    fn split(self) -> (&'static str, Settings, Handler) {
        match self {
            Command::Gen(s) => ("gen", s, commands::gen),
            Command::Simulate(s) => ("simulate", s, commands::simulate),
            Command::Stats(s) => ("stats", s, commands::stats),
            Command::Oracle(s) => ("oracle", s, commands::oracle),
            Command::Distinguish(s) => ("distinguish", s, commands::distinguish),
            Command::Sweep(s) => ("sweep", s, commands::sweep),
            Command::Verify(s) => ("verify", s, commands::verify),
        }
    }
}

fn threads(s: &Settings) -> Result<Option<usize>> {
    if let Some(n) = s.threads {
        return Ok(Some(n));
    }
    match std::env::var("THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map(Some).map_err(|_| {
            Error::Validation(format!("THREADS must be a positive integer, got `{v}`"))
        }),
        _ => Ok(None),
    }
}

fn execute(command: Command) -> Result<bool> {
    let (name, flags, run) = command.split();
    let mut s = settings::merge(flags)?;
    s.check_keys(name)?;
    if let Some(n) = threads(&s)? {
        if n == 0 {
            return Err(Error::Validation("`threads` must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Capacity(format!("thread pool: {e}")))?;
    }
    let format = s.format()?;
    let result = run(&mut s)?;

    match s.out.clone() {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            for t in &result.tables {
                fs::write(
                    dir.join(format!("{}.{}", t.name, format.extension())),
                    t.render(format),
                )?;
            }
            for (file, bytes) in &result.files {
                fs::write(dir.join(file), bytes)?;
            }
            s.command = Some(name.into());
            s.format.get_or_insert_with(|| format.extension().into());
            let mut manifest = serde_json::to_string_pretty(&s)?;
            manifest.push('\n');
            fs::write(dir.join("manifest.json"), manifest)?;
        }
        None => match &result.stdout {
            Some(text) => print!("{text}"),
            None => {
                for t in &result.tables {
                    print!("{}", t.render(format));
                }
            }
        },
    }
    eprintln!("{}", result.summary);
    Ok(!result.failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
