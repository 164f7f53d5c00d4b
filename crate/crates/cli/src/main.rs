//! `coopmac` command-line tool.
//!
//! Exit codes: 0 success, 2 bad input, 3 unsupported request, 4 numerical
//! or validation failure.

mod commands;
mod config;
mod error;
mod output;
mod reproduce;
mod setup;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;
use crate::output::{Bundle, Provenance};
use crate::reproduce::Figure;

#[derive(Debug, Parser)]
#[command(name = "coopmac", version, about = "Rate regions of cooperative multiple-access channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON merge patch applied after the config, in order. A JSON file
    /// exported by this tool may be passed as is; its `config` block is used.
    #[arg(long = "overrides", global = true)]
    overrides: Vec<PathBuf>,
    /// Single-value override, `/json/pointer=value`.
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    /// Output directory (same as `--set /output/path=DIR`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Common-message region for one policy: constraints and vertices.
    Region,
    /// Two-user conferencing region for one policy.
    ConfRegion,
    /// Region of a discrete channel for one input law, or the brute-force union.
    Discrete,
    /// Weighted-sum frontier over a policy grid.
    Frontier,
    /// Randomized round trip between the transmitter and receiver views.
    EquivCheck,
    /// Random-coding error rates over blocklengths.
    Simulate,
    /// Data behind one of the preset figures.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

impl Command {
    fn label(self) -> String {
        match self {
            Self::Region => "region".into(),
            Self::ConfRegion => "conf-region".into(),
            Self::Discrete => "discrete".into(),
            Self::Frontier => "frontier".into(),
            Self::EquivCheck => "equiv-check".into(),
            Self::Simulate => "simulate".into(),
            Self::Reproduce { figure } => format!("reproduce {}", figure.name()),
        }
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema("", format!("{}: invalid JSON: {e}", path.display())))
}

/// Exported files wrap the config next to provenance and data.
fn unwrap_export(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("provenance") && m.contains_key("config") => m.remove("config").expect("checked"),
        other => other,
    }
}

fn assemble(cli: &Cli) -> Result<Value, CliError> {
    let mut value = match &cli.config {
        Some(p) => read_json(p)?,
        None => Value::Object(Default::default()),
    };
    if !value.is_object() {
        return Err(CliError::schema("", "config must be a JSON object"));
    }
    for p in &cli.overrides {
        config::merge_patch(&mut value, &unwrap_export(read_json(p)?));
    }
    for s in &cli.set {
        let (ptr, v) = config::parse_assignment(s)?;
        config::set_pointer(&mut value, &ptr, v)?;
    }
    if let Some(out) = &cli.out {
        config::set_pointer(&mut value, "/output/path", Value::String(out.display().to_string()))?;
    }
    if let Some(f) = cli.format {
        config::set_pointer(&mut value, "/output/format", serde_json::to_value(f).expect("enum serializes"))?;
    }
    Ok(value)
}

fn run(cli: &Cli) -> Result<Option<CliError>, CliError> {
    let mut cfg = config::from_value(assemble(cli)?)?;
    if matches!(cli.command, Command::Reproduce { .. }) && cfg.reproduce.is_none() {
        cfg.reproduce = Some(Default::default());
    }
    // the output block only says where files go, so it is left out of the
    // hash and the embedded config
    let mut canonical = serde_json::to_value(&cfg).expect("config serializes");
    canonical.as_object_mut().expect("object").remove("output");
    let digest = Sha256::digest(serde_json::to_vec(&canonical).expect("value serializes"));

    let outcome = match cli.command {
        Command::Region => commands::region(&cfg)?,
        Command::ConfRegion => commands::conf_region(&cfg)?,
        Command::Discrete => commands::discrete(&cfg)?,
        Command::Frontier => commands::frontier_cmd(&cfg)?,
        Command::EquivCheck => commands::equiv_check(&cfg)?,
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Reproduce { figure } => reproduce::run(&cfg, figure)?,
    };
    let provenance = Provenance {
        tool: format!("coopmac {}", env!("CARGO_PKG_VERSION")),
        command: cli.command.label(),
        config_sha256: format!("{digest:x}"),
        engine: outcome.engine,
        seeds: outcome.seeds,
    };
    let bundle = Bundle::render(outcome.payloads, cfg.output.format, &provenance, &canonical)?;
    for path in bundle.write(Path::new(&cfg.output.path))? {
        println!("{path}");
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let err = match run(&cli) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => e,
    };
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}
