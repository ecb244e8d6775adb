//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the helpers run on rayon; without it
//! every call degrades to the sequential loop. Results never depend on the
//! execution mode: work is split into fixed index chunks and reductions are
//! folded in index order.

use std::ops::Range;

/// Execution mode requested by a caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Fixed chunk length for reductions; part of the determinism contract.
pub const CHUNK: usize = 4096;

/// Maps `f` over `0..n`, preserving order.
pub fn map_indices<R, F>(n: usize, mode: Parallelism, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive index chunks of length [`CHUNK`] and returns
/// the per-chunk results in order.
pub fn map_chunks<R, F>(n: usize, mode: Parallelism, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>) -> R + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    map_indices(chunks, mode, |c| {
        let start = c * CHUNK;
        f(start..(start + CHUNK).min(n))
    })
}

/// Runs `f` on a pool capped at `threads` workers when a cap is given.
pub fn with_thread_cap<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_sums_agree_across_modes() {
        let n = 3 * CHUNK + 17;
        let sum = |mode| -> f64 {
            map_chunks(n, mode, |r| r.map(|i| (i as f64).sqrt()).sum::<f64>())
                .into_iter()
                .sum()
        };
        assert_eq!(sum(Parallelism::Serial).to_bits(), sum(Parallelism::Parallel).to_bits());
    }

    #[test]
    fn map_preserves_order() {
        let v = map_indices(1000, Parallelism::Parallel, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
