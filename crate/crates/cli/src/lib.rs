//! Config-driven experiment runner: analytic sweeps, heralded shot experiments,
//! Monte-Carlo runs and loss calibration, written out as CSV plus a JSON manifest.

pub mod build;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;

use std::path::PathBuf;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};

/// Validate, run and write one experiment; returns the files written.
pub fn run_and_write(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let outcome = run::execute(cfg)?;
    output::write_all(cfg, &outcome.tables, outcome.summary)
}

/// Size the global rayon pool from `PHOTON_QEC_THREADS`, if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("PHOTON_QEC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::config(format!(
            "PHOTON_QEC_THREADS: expected a positive integer, got {raw:?}"
        ))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("PHOTON_QEC_THREADS: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}
