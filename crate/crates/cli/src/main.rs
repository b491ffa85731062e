use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ahc_cli::commands;
use ahc_cli::{CliError, Config, RunManifest};

#[derive(Parser)]
#[command(name = "ahc", version, about = "Active heave compensation: sea synthesis, training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// `section.key = value` configuration file; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: runs/<command>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize wave, vessel motion and net winch heave records.
    Synth(#[command(flatten)] Common),
    /// Train a DDPG agent.
    Train(#[command(flatten)] Common),
    /// Evaluate one controller across the configured sea states.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Trained agent, required for `scenario.controller = rl`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// PD against a trained agent on identical waves.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn load(common: &Common, command: &str) -> Result<(Config, PathBuf), CliError> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| commands::default_out(command));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<RunManifest, CliError> {
    match cli.command {
        Command::Synth(common) => {
            let (cfg, out) = load(&common, "synth")?;
            Ok(commands::synth(&cfg, &out)?)
        }
        Command::Train(common) => {
            let (cfg, out) = load(&common, "train")?;
            commands::train(&cfg, &out, |log| {
                eprintln!(
                    "episode {:>4}  return {:>12.3}  rolling mean {:>12.3}",
                    log.episode, log.total_reward, log.rolling_mean_30
                )
            })
        }
        Command::Eval { common, checkpoint } => {
            let (cfg, out) = load(&common, "eval")?;
            Ok(commands::eval(&cfg, &out, checkpoint.as_deref())?)
        }
        Command::Compare { common, checkpoint } => {
            let (cfg, out) = load(&common, "compare")?;
            Ok(commands::compare(&cfg, &out, checkpoint.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            for (role, file) in &manifest.artifacts {
                println!("{role}: {}", file.display());
            }
            for (key, value) in &manifest.summary {
                println!("{key} = {value}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
