//! Deterministic chunked parallelism over sample indices.
//!
//! Work is split into fixed-size chunks whose boundaries depend only on the
//! number of samples. Each chunk is folded sequentially and the partial
//! results come back in chunk order, so any reduction the caller performs is
//! independent of the worker count.

use rayon::prelude::*;
use std::ops::Range;

/// Samples per chunk. Fixed so that reductions never depend on scheduling.
pub const CHUNK: u64 = 64;

/// Applies `f` to each chunk of `0..n` in parallel; results are in chunk order.
pub fn map_chunks<A, F>(n: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<u64>) -> A + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

/// Like [`map_chunks`] but stops at the first error in index order.
pub fn try_map_chunks<A, E, F>(n: u64, f: F) -> Result<Vec<A>, E>
where
    A: Send,
    E: Send,
    F: Fn(Range<u64>) -> Result<A, E> + Sync + Send,
{
    map_chunks(n, f).into_iter().collect()
}

/// Runs `f` inside a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
