//! Replica scheduling. Results are collected in replica order, and replica
//! `r` always reads random stream `r`, so outputs do not depend on the
//! number of worker threads.

use rayon::prelude::*;

use crate::error::{LabError, Result};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "ENTRANCE_LAB_THREADS";

/// Thread count: explicit request, else the environment variable, else the
/// available parallelism.
pub fn thread_count(requested: Option<usize>) -> Result<usize> {
    if let Some(n) = requested {
        if n == 0 {
            return Err(LabError::config("threads", "must be positive"));
        }
        return Ok(n);
    }
    if let Ok(v) = std::env::var(THREADS_ENV) {
        return match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(LabError::config(THREADS_ENV, format!("expected a positive integer, got {v:?}"))),
        };
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs `f` inside a pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::config("threads", e.to_string()))?;
    Ok(pool.install(f))
}

/// `f(0), .., f(count - 1)` on the current pool, in order.
pub fn map_replicas<T: Send>(count: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..count).into_par_iter().map(f).collect()
}

/// Splits `total` work items into `chunks` nearly equal replicas.
pub fn chunk_sizes(total: u64, chunks: u64) -> Vec<u64> {
    let chunks = chunks.max(1).min(total.max(1));
    (0..chunks).map(|i| total / chunks + u64::from(i < total % chunks)).collect()
}
