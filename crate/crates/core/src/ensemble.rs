//! Deterministic Monte-Carlo fan-out.
//!
//! Trials are split into fixed-size chunks. Each chunk folds its trials in
//! index order; chunk results are combined by a balanced pairwise tree whose
//! shape depends only on the trial count. Results are therefore identical for
//! any worker count.

use crate::error::Result;

/// Trials per chunk. Part of the reduction order, so changing it changes
/// floating-point results.
pub const CHUNK: u64 = 32;

/// Values that can be merged associatively.
pub trait Merge: Sized {
    fn merge(self, other: Self) -> Self;
}

fn tree_reduce<T: Merge>(mut items: Vec<T>) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        items = next;
    }
    items.pop()
}

fn run_chunk<T, F>(range: std::ops::Range<u64>, f: &F) -> Result<Option<T>>
where
    T: Merge,
    F: Fn(u64) -> Result<T>,
{
    let mut acc: Option<T> = None;
    for k in range {
        let v = f(k)?;
        acc = Some(match acc {
            Some(a) => a.merge(v),
            None => v,
        });
    }
    Ok(acc)
}

/// Runs `f` for trials `0..trials` and merges the results. Returns `None`
/// for zero trials.
pub fn run_trials<T, F>(trials: u64, f: F) -> Result<Option<T>>
where
    T: Merge + Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let chunks: Vec<std::ops::Range<u64>> = (0..trials.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(trials))
        .collect();
    #[cfg(feature = "parallel")]
    let partial: Vec<Result<Option<T>>> = {
        use rayon::prelude::*;
        chunks.into_par_iter().map(|r| run_chunk(r, &f)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<Result<Option<T>>> = chunks.into_iter().map(|r| run_chunk(r, &f)).collect();
    let mut parts = Vec::with_capacity(partial.len());
    for p in partial {
        if let Some(v) = p? {
            parts.push(v);
        }
    }
    Ok(tree_reduce(parts))
}

/// Runs `f` for every trial and keeps the per-trial outputs in order.
pub fn map_trials<T, F>(trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(|k| f(k)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

/// Runs `body` inside a pool of `threads` workers (machine default if
/// `None`). Without the `parallel` feature the body runs inline.
pub fn with_threads<R: Send>(threads: Option<usize>, body: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| crate::error::Error::domain(format!("thread pool: {e}")))?;
                Ok(pool.install(body))
            }
            None => Ok(body()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(body())
    }
}

impl Merge for f64 {
    fn merge(self, other: Self) -> Self {
        self + other
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge(self, other: Self) -> Self {
        assert_eq!(self.len(), other.len(), "merging accumulators of different shape");
        self.into_iter().zip(other).map(|(a, b)| a.merge(b)).collect()
    }
}

impl Merge for num_complex::Complex64 {
    fn merge(self, other: Self) -> Self {
        self + other
    }
}
