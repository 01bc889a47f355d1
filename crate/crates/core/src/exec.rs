//! Execution strategy for the embarrassingly parallel parts of inference.
//!
//! Implementations must preserve index order in `map` results so that
//! reductions downstream are independent of the number of threads.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluate `f(i)` for `i in 0..len`, returning results in index order.
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;

    /// Apply `f(chunk_index, chunk)` to consecutive `chunk_len`-sized chunks.
    fn for_each_chunk<F>(&self, data: &mut [f64], chunk_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }

    fn for_each_chunk<F>(&self, data: &mut [f64], chunk_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        for (i, chunk) in data.chunks_mut(chunk_len).enumerate() {
            f(i, chunk);
        }
    }
}
