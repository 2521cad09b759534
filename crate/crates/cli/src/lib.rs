//! Configuration-driven front end: `simulate`, `verify` and `bench`.

mod bench;
pub mod config;
mod output;
mod simulate;
mod verify;

use std::path::PathBuf;

pub use bench::{cmd_bench, run_bench, BenchEntry, BenchReport};
pub use config::{RunConfig, stage_seed};
pub use simulate::cmd_simulate;
pub use verify::{cmd_verify, run_verify, Suite, VerifyOutcome, VerifyReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable consulted when `--workers` is absent.
pub const WORKERS_ENV: &str = "REPELSIM_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] repelsim::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use repelsim::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Run(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Run(
                E::NonPositiveCoefficient { .. } | E::DimensionMismatch { .. } | E::ModeCount(_) | E::Config(_),
            ) => EXIT_CONFIG,
            CliError::Run(_) => EXIT_FAIL,
        }
    }
}

/// Command-line options shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// `section.key=value` pairs, applied after the file.
    pub overrides: Vec<(String, String)>,
}

impl Invocation {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(("sim.seed".into(), seed.to_string()));
        }
        let workers = self.workers.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()));
        if let Some(w) = workers {
            overrides.push(("ensemble.workers".into(), w.to_string()));
        }
        let mut cfg = RunConfig::load(self.config.as_deref(), &overrides)?;
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}
