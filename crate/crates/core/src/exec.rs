//! Index-parallel map abstraction used by sweeps and the Monte-Carlo oracle.
//!
//! Every caller returns results ordered by index and reduces them in index
//! order, so the output does not depend on how an executor schedules work.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), f(1), ..., f(len - 1)` and returns the results in
    /// index order.
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
