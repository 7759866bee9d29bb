//! Batch drivers behind the command-line tool: single runs, (lambda, alpha)
//! sweeps with critical-alpha bisection, and validation suites.

mod simulate;
mod sweep;
mod validate;

pub use simulate::{simulate, RunSummary};
pub use sweep::{bisect_alpha_c, run_cell, run_sweep, AlphaCRow, SweepPlan, SweepResult, SweepRow, UNRELIABLE_CENSORING};
pub use validate::{run_suite, Check, ValidationReport, SUITES};

/// Runs `f` on a rayon pool of `threads` workers (0: rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> crate::error::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::error::Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(f))
}
