//! `teleswim`: command-line front end for the non-homogeneous telegraph
//! process.
//!
//! Exit codes: 0 success, 1 runtime error, 2 configuration error, 3 quality
//! error (aliasing or a tolerance check failed). Errors are also printed to
//! stderr as one JSON object `{"error": {"kind", "exit_code", "message"}}`.
//!
//! `TELESWIM_THREADS` caps the number of worker threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Overrides, Resolved, PRESETS};
use output::Sink;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    Quality(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Runtime(_) => "runtime",
            Self::Quality(_) => "quality",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            Self::Runtime(_) => 1,
            Self::Config(_) => 2,
            Self::Quality(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Runtime(m) | Self::Quality(m) => m,
        }
    }
}

impl From<teleswim_core::Error> for CliError {
    fn from(e: teleswim_core::Error) -> Self {
        use teleswim_core::Error as E;
        match e {
            E::Quality(_) => Self::Quality(e.to_string()),
            E::Domain(_) | E::Extrapolation { .. } | E::Saturation { .. } | E::Capability(_) => {
                Self::Config(e.to_string())
            }
            E::Singularity(_) | E::Degenerate(_) => Self::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "teleswim", version, about = "Run-and-tumble (telegraph) process with time-varying speed and rate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file, applied on top of the preset.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed of the Monte Carlo ensemble.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of simulated paths.
    #[arg(long, global = true, value_name = "N")]
    paths: Option<usize>,
    /// Bundled configuration: paper-classical, light-switch or power-law-<beta>.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact density and front atoms (proportional rate only).
    Density,
    /// Monte Carlo ensemble: paths, histogram and summary.
    Simulate,
    /// Mean square displacement, exponent fit and regime prediction.
    Msd,
    /// Finite-volume solution of the two-velocity system.
    Pde,
    /// Space-fractional characteristic function and its inversion.
    Charfun,
    /// Long-time regime for a speed decaying as t^(-beta).
    ///
    /// The boundaries beta = 0 and beta = 1 are exact; exponents fitted to
    /// finite data near them cannot tell neighbouring regimes apart.
    Classify {
        #[arg(allow_negative_numbers = true)]
        beta: f64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TELESWIM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("TELESWIM_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    if let Command::Classify { beta } = cli.command {
        return Ok(vec![teleswim_core::analytic::classify_regime(beta)?.to_string()]);
    }
    configure_threads()?;
    let text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?),
        None => None,
    };
    let overrides = Overrides {
        seed: cli.seed,
        paths: cli.paths,
        out: cli.out,
    };
    let config = config::load(cli.preset.as_deref(), text.as_deref(), &overrides)?;
    let resolved = Resolved::new(config)?;
    let mut sink = Sink::new(&resolved.config)?;
    let mut lines = match cli.command {
        Command::Density => commands::density(&resolved, &mut sink),
        Command::Simulate => commands::simulate(&resolved, &mut sink),
        Command::Msd => commands::msd(&resolved, &mut sink),
        Command::Pde => commands::pde(&resolved, &mut sink),
        Command::Charfun => commands::charfun(&resolved, &mut sink),
        Command::Classify { .. } => unreachable!("handled above"),
    }?;
    lines.extend(sink.written().iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

fn report(error: &CliError) -> ExitCode {
    let doc = json!({
        "error": {
            "kind": error.kind(),
            "exit_code": error.exit_code(),
            "message": error.message(),
        }
    });
    eprintln!("{doc}");
    ExitCode::from(error.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = format!("{}; presets: {PRESETS}", e.kind());
            let rendered = e.render().to_string();
            return report(&CliError::Config(format!("{message}\n{}", rendered.trim_end())));
        }
    };
    match run(cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
