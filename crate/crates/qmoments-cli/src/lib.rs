//! Command-line runs of truncated moment hierarchies: configuration,
//! subcommands and hashed, atomically written outputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{FlavorChoice, RunConfig, TimeSpec};
use error::CliError;
use output::Output;

#[derive(Debug, Parser)]
#[command(name = "qmoments", version, about = "Moment hierarchies for polynomial potentials")]
pub struct Cli {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "n-max", global = true, value_delimiter = ',')]
    pub n_max: Option<Vec<usize>>,
    #[arg(long, global = true, value_enum)]
    pub flavor: Option<FlavorChoice>,
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    #[arg(long, global = true)]
    pub p0: Option<f64>,
    /// End time: absolute, or in periods ("2T").
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long = "dump-config", global = true)]
    pub dump_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Integrate the hierarchy; trajectory, inequality margins, summary.
    Evolve,
    /// Point, classical and quantum runs side by side; Δₙ and δ₁/δ₂/γ.
    Compare,
    /// Stationary moments and fixed-point residuals.
    Stationary,
    /// Ground-energy intervals from the inequality suites.
    Bounds,
    /// Monte-Carlo and wavefunction references for the hierarchy.
    Oracle,
    /// Agreement of stationary moments across cutoffs.
    Converge,
}

fn time_spec(s: &str) -> TimeSpec {
    s.trim().parse::<f64>().map(TimeSpec::Absolute).unwrap_or_else(|_| TimeSpec::Text(s.to_owned()))
}

impl Cli {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = &self.n_max {
            cfg.n_max = n.clone();
        }
        if let Some(f) = self.flavor {
            cfg.flavor = f;
        }
        if let Some(h) = self.hbar {
            cfg.hbar = h;
        }
        if let Some(p) = self.p0 {
            cfg.initial.p0 = p;
        }
        if let Some(t) = &self.t_end {
            cfg.t_end = time_spec(t);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the CLI and returns the process exit status.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let cfg = cli.resolve()?;
    if cli.dump_config {
        println!("{}", cfg.canonical_json());
        return Ok(0);
    }
    let Some(cmd) = cli.command else {
        return Err(CliError::config("no subcommand given"));
    };
    let mut out = Output::new(&cli.out, &cfg.hash())?;
    out.text("resolved_config.json", &(cfg.canonical_json() + "\n"))?;
    let mut run = commands::Run::new(cfg, out)?;
    match cmd {
        Command::Evolve => commands::evolve(&mut run),
        Command::Compare => commands::compare(&mut run),
        Command::Stationary => commands::stationary(&mut run),
        Command::Bounds => commands::bounds(&mut run),
        Command::Oracle => commands::oracle(&mut run),
        Command::Converge => commands::converge(&mut run),
    }
}
