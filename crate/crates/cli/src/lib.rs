//! Batch runner behind the `fraclab` binary.
//!
//! ```text
//! fraclab <subcommand> --config <path> [--out <dir>] [--threads <n>]
//! ```
//!
//! Exit codes: 0 on success, 2 when the config or a parameter is invalid,
//! 3 when a computation fails.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use commands::Subcommand;

use cache::KernelCache;
use config::ExperimentConfig;
use output::Format;

/// Failure of a CLI run.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fraclab_core::error::Error> for CliError {
    fn from(e: fraclab_core::error::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Fractional Laplacian experiments")]
pub struct Args {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for CSV tables.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; defaults to the rayon default.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Loads `config_path`, runs `cmd` and writes its CSVs under `out`.
/// Returns the written paths.
pub fn execute(cmd: Subcommand, config_path: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let config = ExperimentConfig::load(config_path)?;
    execute_config(cmd, &config, out)
}

pub fn execute_config(cmd: Subcommand, config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if let Some(name) = &config.subcommand {
        if name != cmd.name() {
            return Err(CliError::Validation(format!(
                "config is for subcommand {name}, invoked as {}",
                cmd.name()
            )));
        }
    }
    let cache = KernelCache::from_env(&commands::default_cache_dir(out));
    let ctx = commands::Context {
        config,
        cache: &cache,
        fmt: Format {
            precision: config.output.precision,
        },
    };
    let tables = commands::dispatch(cmd, &ctx)?;
    let hash = config.resolved_hash(cmd.name());
    let prefix = config.output.prefix.clone().unwrap_or_default();
    tables.iter().map(|t| t.write(out, &prefix, &hash)).collect()
}

/// Entry point of the binary; returns the process exit code.
pub fn run(args: Args) -> i32 {
    let job = || execute(args.subcommand, &args.config, &args.out);
    let result = match args.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(job),
            Err(e) => Err(CliError::Validation(format!("--threads {n}: {e}"))),
        },
        None => job(),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("fraclab {}: {e}", args.subcommand.name());
            e.exit_code()
        }
    }
}
