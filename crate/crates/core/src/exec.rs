//! Per-sample execution helpers.
//!
//! With the `parallel` feature the sample loops fan out over the rayon pool,
//! otherwise they run on the calling thread. Results are always collected in
//! sample order and every reduction happens sequentially afterwards, so the
//! numbers are identical whichever path runs.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{DoqError, Result};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force the sequential path even when the `parallel` feature is on.
/// Used by the benchmarks to compare both paths in one binary.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Evaluate `f(0..n)` and collect in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]; the error of the lowest failing
/// index is reported, tagged with that index.
pub fn try_map_indexed<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(n, |i| f(i).map_err(|e| e.at_sample(i)))
        .into_iter()
        .collect::<Result<Vec<T>>>()
}

/// Sequential mean; keeps the summation order fixed.
pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(DoqError::domain("mean of an empty sample set"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
