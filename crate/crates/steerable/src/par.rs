//! Execution helper bridging the optional rayon pool and the sequential
//! fallback.
//!
//! Only an order-preserving pattern is exposed: an indexed map collected in
//! index order. With either backend each output slot is produced by exactly
//! one closure call whose internal arithmetic order is fixed by the caller,
//! so results are bit-identical across thread counts and across the two
//! backends.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Collect `f(0), …, f(n-1)` in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Collect `f(0), …, f(n-1)` in index order.
#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
