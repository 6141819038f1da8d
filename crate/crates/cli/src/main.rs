//! `vacpol`: batch runs of the density, sweep, Uehling and index checks.
//!
//! Exit codes: 0 success, 1 i/o error, 2 configuration error, 3 numerical
//! failure, 4 a checked statement was violated.

mod commands;
mod config;
mod failure;
mod index_demo;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};
use failure::Failure;
use output::Sink;

#[derive(Parser)]
#[command(name = "vacpol", version, about = "Vacuum polarization and spectral flow batch runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; 0 or absent uses all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Nuclear profile: n(r), n̂(k), φ(r), enclosed charge, regularity integral.
    Density,
    /// Gap-eigenvalue trajectories, diving couplings and the vacuum charge.
    Sweep,
    /// Uehling function in both forms and the induced charge density.
    Uehling,
    /// Projector-index checks on matrix and lattice models.
    IndexDemo,
}

fn configure(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn set_threads(n: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(n: Option<usize>) -> Result<(), Failure> {
    match n {
        Some(n) if n > 1 => Err(Failure::Config("built without the parallel feature; --threads must be 1".into())),
        _ => Ok(()),
    }
}

type Runner = fn(&RunConfig, &mut Sink) -> Result<(), Failure>;

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = configure(cli)?;
    set_threads(cli.threads)?;
    let (name, command): (&str, Runner) = match cli.command {
        Command::Density => ("density", commands::cmd_density),
        Command::Sweep => ("sweep", commands::cmd_sweep),
        Command::Uehling => ("uehling", commands::cmd_uehling),
        Command::IndexDemo => ("index-demo", index_demo::cmd_index_demo),
    };
    let mut sink = Sink::new(&cfg, name)?;
    let outcome = command(&cfg, &mut sink);
    // numerical and configuration failures leave no metadata behind
    if matches!(outcome, Ok(()) | Err(Failure::Assertion(_))) {
        let meta = sink.finish()?;
        for f in &meta.files {
            println!("{}", cfg.output.dir.join(f).display());
        }
    }
    outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vacpol: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
