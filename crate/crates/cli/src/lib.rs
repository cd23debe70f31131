//! Front end of the `cusplab` binary: configuration, command dispatch and report
//! emission.

pub mod commands;
pub mod config;
pub mod emit;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use sha2::{Digest, Sha256};

#[derive(Debug, Parser)]
#[command(name = "cusplab", version, about = "Numerical checks for a cusp-shaped body approaching a wall")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace a config value, e.g. `--override norms.p=3`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Field,
    Kernel,
    Norms,
    Certify,
    Fall,
    Dichotomy,
    Pd,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Field => "field",
            Command::Kernel => "kernel",
            Command::Norms => "norms",
            Command::Certify => "certify",
            Command::Fall => "fall",
            Command::Dichotomy => "dichotomy",
            Command::Pd => "pd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        };
        // one line, whatever the message contains
        write!(f, "{}", msg.replace(['\n', '\r'], " "))
    }
}

impl From<cusplab_core::Error> for CliError {
    fn from(e: cusplab_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON of the effective configuration.
pub fn input_digest(doc: &serde_json::Value) -> String {
    let canonical = serde_json::to_vec(&emit::canonicalize(doc.clone())).expect("a Value always serializes");
    Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `WORKERS`; `None` when unset.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("WORKERS") {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Validation(format!("WORKERS: {e}"))),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("WORKERS = {s:?} is not a positive integer"))),
        },
    }
}

/// Loads and validates the configuration, runs the command and writes its files.
/// Returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let (cfg, doc) = config::load(&cli.config, &cli.overrides)?;
    cfg.validate()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let files = commands::execute(cli.command, &cfg, &input_digest(&doc))?;
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        emit::write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}
