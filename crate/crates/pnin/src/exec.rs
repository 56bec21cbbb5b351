//! Thread-pool executor for sweeps and Monte-Carlo runs.

use pnin_core::Executor;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Serial when `--deterministic` or one thread is requested, otherwise a
/// rayon pool. Results come back in index order either way.
pub enum Parallel {
    Serial,
    Pool(rayon::ThreadPool),
}

impl Parallel {
    /// `threads = None` uses the machine's available parallelism.
    pub fn new(threads: Option<usize>, deterministic: bool) -> CliResult<Self> {
        if deterministic {
            return Ok(Parallel::Serial);
        }
        let n = match threads {
            Some(0) => return Err(CliError::config("--threads must be >= 1")),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        if n == 1 {
            return Ok(Parallel::Serial);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Parallel::Pool)
            .map_err(|e| CliError::config(format!("cannot start {n} worker threads: {e}")))
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Parallel::Serial => (0..len).map(f).collect(),
            Parallel::Pool(pool) => pool.install(|| (0..len).into_par_iter().map(f).collect()),
        }
    }
}
