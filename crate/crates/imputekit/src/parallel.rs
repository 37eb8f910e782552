//! Thread-parallel execution of independent imputation runs.
//!
//! Runs are seeded by index, so the result of run `i` does not depend on
//! which thread executes it; outputs are collected in run order.

use anyhow::Result;
use rayon::prelude::*;

pub const WORKERS_ENV: &str = "IMPUTEKIT_WORKERS";

/// Worker count from the environment, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Evaluates `f(0..n)` on up to `workers` threads, results in index order.
pub fn run_indexed<T, E, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    E: Into<anyhow::Error> + Send,
    F: Fn(usize) -> std::result::Result<T, E> + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || n <= 1 {
        return (0..n).map(|i| f(i).map_err(Into::into)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.min(n)).build()?;
    let out: Vec<std::result::Result<T, E>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
    out.into_iter().map(|r| r.map_err(Into::into)).collect()
}
