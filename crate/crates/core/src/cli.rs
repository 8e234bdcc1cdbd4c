//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or configuration problems, 2 when a
//! run fails or a validation check does not pass.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiment::{figure_presets, preset, run_experiment_with, write_stats, ExperimentConfig, OutputFormat, RunOptions};
use crate::oracles;

pub const SEED_ENV: &str = "RIS_SIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "rissim", version, about = "Monte Carlo rate simulator for RIS-assisted links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run one of the built-in presets.
    Preset {
        name: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the built-in oracle checks.
    Validate,
    /// List the built-in presets.
    ListPresets,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Destination file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Master seed; takes precedence over the RIS_SIM_SEED variable.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Run trials on the calling thread only.
    #[arg(long)]
    serial: bool,
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn error(&self) -> &Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &OutputArgs) -> Result<()> {
    if let Some(seed) = args.seed.map_or_else(seed_from_env, |s| Ok(Some(s)))? {
        cfg.master_seed = seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.validate()
}

fn execute(mut cfg: ExperimentConfig, args: &OutputArgs) -> std::result::Result<(), Failure> {
    apply_overrides(&mut cfg, args).map_err(Failure::Config)?;
    let stats = run_experiment_with(&cfg, RunOptions { parallel: !args.serial }).map_err(Failure::Runtime)?;
    let format = match args.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let written = match &args.output {
        Some(path) => File::create(path)
            .map_err(Error::from)
            .and_then(|f| write_stats(&stats, format, BufWriter::new(f))),
        None => write_stats(&stats, format, io::stdout().lock()),
    };
    written.map_err(Failure::Runtime)
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
}

fn list_presets() {
    let mut out = io::stdout().lock();
    for p in figure_presets() {
        let grid = &p.ris;
        let _ = writeln!(
            out,
            "{:6} {} {} GHz  tx=({}, {}, {})  rx=({}, {}, {})  ris x={:?} y={:?} z={:?}  N={:?}",
            p.name, p.environment, p.fc_ghz, p.tx.x, p.tx.y, p.tx.z, p.rx.x, p.rx.y, p.rx.z, grid.x, grid.y, grid.z,
            p.n_elements
        );
    }
}

fn validate() -> i32 {
    let checks = oracles::validate();
    let mut out = io::stdout().lock();
    for c in &checks {
        let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        0
    } else {
        2
    }
}

/// Parses `argv` (program name first) and runs the selected command.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::ListPresets => {
            list_presets();
            Ok(())
        }
        Command::Validate => return validate(),
        Command::Run { config, output } => match load_config(&config) {
            Ok(cfg) => execute(cfg, &output),
            Err(e) => Err(Failure::Config(e)),
        },
        Command::Preset { name, output } => match preset(&name) {
            Ok(cfg) => execute(cfg, &output),
            Err(e) => {
                let names: Vec<_> = figure_presets().into_iter().map(|p| p.name).collect();
                eprintln!("available presets: {}", names.join(", "));
                Err(Failure::Config(e))
            }
        },
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error());
            f.code()
        }
    }
}
