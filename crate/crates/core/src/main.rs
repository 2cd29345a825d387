use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pilotwave::io::{run_pipeline, RunConfig, Stage};

/// Two-slit Bohm trajectories and simulated weak momentum measurements.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate psi and the derived local fields.
    Fields(Common),
    /// Born-sampled RK4 Bohm trajectories.
    Trajectories(Common),
    /// Simulated weak momentum scan over the plane grid.
    WeakScan(Common),
    /// Flow-line reconstruction from the weak scan.
    Reconstruct(Common),
    /// Reconstructed versus exact trajectory metrics.
    Compare(Common),
    /// Single field-mode beable trajectory.
    FieldMode(Common),
    /// Every stage listed in the config (all by default).
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one config key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, stages) = match cli.command {
        Command::Fields(c) => (c, Some(vec![Stage::Fields])),
        Command::Trajectories(c) => (c, Some(vec![Stage::Trajectories])),
        Command::WeakScan(c) => (c, Some(vec![Stage::WeakScan])),
        Command::Reconstruct(c) => (c, Some(vec![Stage::Reconstruct])),
        Command::Compare(c) => (c, Some(vec![Stage::Compare])),
        Command::FieldMode(c) => (c, Some(vec![Stage::FieldMode])),
        Command::Run(c) => (c, None),
    };

    let text = match &common.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => String::new(),
    };
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed = {seed}"));
    }
    if let Some(out) = &common.out {
        overrides.push(format!("out_dir = {}", out.display()));
    }
    let mut cfg = match RunConfig::parse_with_overrides(&text, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(stages) = stages {
        cfg.stages = stages;
    }

    match run_pipeline(&cfg) {
        Ok(manifest) => {
            for r in &manifest.stages {
                match &r.status {
                    pilotwave::io::StageStatus::Ok => println!(
                        "{:<13} ok       {:>8.3}s  {}",
                        r.stage.name(),
                        r.wall_seconds,
                        r.file.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
                    ),
                    pilotwave::io::StageStatus::Aborted(msg) => {
                        println!("{:<13} ABORTED  {msg}", r.stage.name())
                    }
                }
            }
            for (k, v) in &manifest.summary {
                println!("  {k} = {v}");
            }
            if manifest.all_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
