//! `maxplus` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxplus_cli::{parse_config, run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(name = "maxplus", version, about = "Max-plus basis solver for switched LQ control")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Propagate and prune; writes approx.json and steps.csv.
    Solve(Flags),
    /// Solve, then evaluate the Hamiltonian residual on a grid slice.
    Residual(Flags),
    /// Compare every pruner on one propagated set.
    PruneBench(Flags),
    /// Approximation error against the number of basis functions.
    Scaling(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Keep schedule, an integer expression in the step index `i`.
    #[arg(long)]
    keep: Option<String>,
    /// sort-upper, sort-lower, jv, greedy, brute or none.
    #[arg(long)]
    pruner: Option<String>,
    /// Witness samples per form.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Residual slice as axis1,axis2,min,max,res (axes 1-based).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_grid(text: &str, cfg: &mut RunConfig) -> Result<(), CliError> {
    let bad = || CliError::Config(format!("--grid: expected axis1,axis2,min,max,res, got '{text}'"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    cfg.grid.axes = [parts[0].parse().map_err(|_| bad())?, parts[1].parse().map_err(|_| bad())?];
    cfg.grid.min = parts[2].parse().map_err(|_| bad())?;
    cfg.grid.max = parts[3].parse().map_err(|_| bad())?;
    cfg.grid.resolution = parts[4].parse().map_err(|_| bad())?;
    Ok(())
}

fn load(flags: Flags) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&flags.config).map_err(|e| CliError::io(&flags.config, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(v) = flags.tau {
        cfg.tau = v;
    }
    if let Some(v) = flags.steps {
        cfg.steps = v;
    }
    if let Some(v) = flags.keep {
        cfg.keep = v;
    }
    if let Some(v) = flags.pruner {
        cfg.pruner = v;
    }
    if let Some(v) = flags.samples {
        cfg.samples = v;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.grid {
        parse_grid(&v, &mut cfg)?;
    }
    if let Some(v) = flags.out {
        cfg.out = v;
    }
    if flags.threads.is_some() {
        cfg.threads = flags.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, flags) = match cli.command {
        Cmd::Solve(f) => (Command::Solve, f),
        Cmd::Residual(f) => (Command::Residual, f),
        Cmd::PruneBench(f) => (Command::PruneBench, f),
        Cmd::Scaling(f) => (Command::Scaling, f),
    };
    match load(flags).and_then(|cfg| run(cmd, &cfg)) {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, f.name);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
