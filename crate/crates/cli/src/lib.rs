//! Experiment runner for the riotwave laboratory: TOML configs in,
//! deterministic CSV/JSON data and gnuplot files out.

pub mod config;
pub mod dispatch;
pub mod error;
pub mod manifest;
pub mod plot;

pub use config::{parse_config, ExperimentConfig};
pub use dispatch::dispatch;
pub use error::CliError;
pub use manifest::RunManifest;

pub const THREADS_ENV: &str = "RIOTWAVE_THREADS";

/// Caps the global worker pool from `RIOTWAVE_THREADS`; unset means one
/// worker per hardware thread.
pub fn init_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    Ok(Some(n))
}
