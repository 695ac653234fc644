//! Scenario configuration, run orchestration and reporting for `cslab-core`.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod suite;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CSLAB_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn init_threads() -> Result<(), error::CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| error::CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // A pool that already exists keeps its size; that only happens in embedded use.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
