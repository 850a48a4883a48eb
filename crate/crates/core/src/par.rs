use std::ops::Add;

use rayon::prelude::*;

/// Fixed block length for parallel reductions.
pub(crate) const BLOCK: usize = 2048;

/// Sums `term(i)` for `i in 0..len` with a summation order that depends only
/// on `len`, never on the number of worker threads.
pub(crate) fn sum<T, F>(len: usize, zero: T, term: F) -> T
where
    T: Add<Output = T> + Copy + Send + Sync,
    F: Fn(usize) -> T + Sync + Send,
{
    reduce(len, zero, term, |a, b| a + b)
}

/// [`sum`] with an explicit combining function.
pub(crate) fn reduce<T, F, C>(len: usize, zero: T, term: F, combine: C) -> T
where
    T: Copy + Send + Sync,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    let partial: Vec<T> = (0..len.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let end = ((b + 1) * BLOCK).min(len);
            (b * BLOCK..end).fold(zero, |acc, i| combine(acc, term(i)))
        })
        .collect();
    partial.into_iter().fold(zero, &combine)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.len(), 0.0, |i| a[i] * b[i])
}
