//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Session};
use crate::config::{parse_config, parse_config_str, ConfigError, DetuningChoice, Origin, Parsed};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "pcqc", version, about = "Conditional teleportation and two-zone readout simulator")]
pub struct Args {
    /// Configuration file (TOML); defaults are used for anything missing.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the shot simulation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated detunings in rad/s, replacing the automatic choice.
    #[arg(long, global = true)]
    pub deltas: Option<String>,
    /// Accepted shots per detuning.
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Calibrate couplings and Rabi frequencies.
    Calibrate,
    /// Run the teleportation stages and write fig2.csv and fig3.csv.
    Teleport,
    /// Sweep the readout, write fig4.csv and fig5.csv, invert noiselessly.
    Readout,
    /// Invert a `delta,P1` measurement file.
    Tomo {
        measurements: PathBuf,
    },
    /// Monte Carlo shots and weighted tomography.
    Shots,
    /// Every stage end to end.
    Full,
}

fn cli_error(field: &str, reason: String) -> CliError {
    CliError::Config(ConfigError::Invalid {
        field: field.into(),
        origin: Origin::Unknown,
        reason,
    })
}

pub fn parse_deltas(raw: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for cell in raw.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => return Err(cli_error("--deltas", format!("cannot parse \"{cell}\" as a detuning"))),
        }
    }
    let mut sorted = out.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < 4 || sorted.len() != out.len() {
        return Err(cli_error("--deltas", format!("need at least 4 distinct detunings, got {out:?}")));
    }
    Ok(out)
}

/// Loads the configuration and applies command-line overrides.
pub fn load(args: &Args) -> Result<Parsed, CliError> {
    let mut parsed = match &args.config {
        Some(path) => parse_config(path)?,
        None => parse_config_str("", std::env::vars(), None)?,
    };
    let cfg = &mut parsed.config;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.shots.seed = seed;
    }
    if let Some(n) = args.shots {
        if n == 0 {
            return Err(cli_error("--shots", "must be at least 1".into()));
        }
        cfg.shots.accepted_per_delta = n;
    }
    if let Some(raw) = &args.deltas {
        cfg.readout.detunings = DetuningChoice::Fixed(parse_deltas(raw)?);
    }
    Ok(parsed)
}

/// Runs the selected command and writes `report.txt`.
pub fn run(args: &Args) -> Result<Session, CliError> {
    let parsed = load(args)?;
    if !args.quiet {
        for w in &parsed.warnings {
            eprintln!("warning: {w}");
        }
    }
    let mut session = Session::new(parsed.config, &parsed.warnings);
    match &args.command {
        Command::Calibrate => commands::cmd_calibrate(&mut session)?,
        Command::Teleport => commands::cmd_teleport(&mut session)?,
        Command::Readout => commands::cmd_readout(&mut session)?,
        Command::Tomo { measurements } => {
            commands::cmd_tomo(&mut session, measurements)?;
        }
        Command::Shots => {
            commands::cmd_shots(&mut session)?;
        }
        Command::Full => commands::cmd_full(&mut session)?,
    }
    session.finish()?;
    Ok(session)
}
