//! Driver behind the `blab` binary: argument parsing, run orchestration
//! and output files for the `simulate`, `td-run`, `verify` and `analyze`
//! subcommands.

use std::fs;
use std::path::PathBuf;

use blab_core::io::{RunConfig, Subcommand as Kind};
use clap::{Args, Parser, Subcommand};

mod commands;

pub use commands::{analyze, simulate, td_run, verify};

#[derive(Debug, Parser)]
#[command(name = "blab", version, about = "Euler-Boussinesq simulator and estimate verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the Boussinesq system.
    Simulate(RunArgs),
    /// Integrate the transport-diffusion equation with a prescribed velocity.
    TdRun(RunArgs),
    /// Evaluate an estimate on fixed-seed random ensembles.
    Verify(RunArgs),
    /// Per-shell norms of a snapshot.
    Analyze(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] blab_core::Error),
}

impl CliError {
    /// 1 when the numerics failed, 2 for configuration and usage problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(blab_core::Error::Blowup { .. } | blab_core::Error::NonFinite { .. }) => 1,
            _ => 2,
        }
    }
}

/// One pass/fail assertion of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub output_dir: PathBuf,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Reads the config file, applies overrides and checks that it targets
/// `expected`.
pub fn load_config(args: &RunArgs, expected: Kind) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RunConfig::with_overrides(&text, &args.set)?;
    if cfg.subcommand() != expected {
        return Err(CliError::Usage(format!(
            "config is for '{}', not '{}'",
            cfg.subcommand().name(),
            expected.name()
        )));
    }
    Ok(cfg)
}

/// Creates the output directory and writes the resolved-config echo.
pub fn prepare_output(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(blab_core::Error::from)?;
    fs::write(dir.join("resolved.cfg"), cfg.resolved()).map_err(blab_core::Error::from)?;
    Ok(dir)
}

/// Runs a validated config.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = prepare_output(cfg)?;
    let checks = match cfg.subcommand() {
        Kind::Simulate => simulate(cfg, &dir)?,
        Kind::TdRun => td_run(cfg, &dir)?,
        Kind::Verify => verify(cfg, &dir)?,
        Kind::Analyze => analyze(cfg, &dir)?,
    };
    blab_core::io::emit_csv(
        checks.iter().map(|c| {
            blab_core::io::ResultRow::new(cfg.run_id(), 0.0, format!("check.{}", c.name), if c.passed { 1.0 } else { 0.0 })
        }),
        dir.join("checks.csv"),
    )?;
    Ok(Outcome {
        output_dir: dir,
        checks,
    })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (args, kind) = match &cli.command {
        Command::Simulate(a) => (a, Kind::Simulate),
        Command::TdRun(a) => (a, Kind::TdRun),
        Command::Verify(a) => (a, Kind::Verify),
        Command::Analyze(a) => (a, Kind::Analyze),
    };
    execute(&load_config(args, kind)?)
}
