//! Row-parallel execution helpers shared by the field kernels.
//!
//! Every kernel in this crate writes disjoint output rows and reduces through
//! per-row partial sums combined in row order, so the parallel and sequential
//! paths produce bit-identical results. With the `parallel` feature disabled
//! only the sequential path is compiled.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Chunk length used for flat (non-row) loops.
const FLAT_CHUNK: usize = 4096;

/// Enables or disables the rayon path at runtime.
///
/// Has no effect when the crate is built without the `parallel` feature.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled && cfg!(feature = "parallel"), Ordering::Relaxed);
}

/// Whether kernels currently dispatch to rayon.
pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Calls `f(j, row)` for every row `j` of a row-major buffer with rows of
/// length `nx`.
pub fn for_each_row<F>(out: &mut [f64], nx: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| f(j, row));
        return;
    }
    out.chunks_mut(nx).enumerate().for_each(|(j, row)| f(j, row));
}

/// Sums `f(j)` over `0..rows`, combining partial results in index order.
pub fn sum_rows<F>(rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        let partial: Vec<f64> = (0..rows).into_par_iter().map(&f).collect();
        return partial.iter().sum();
    }
    (0..rows).map(f).collect::<Vec<_>>().iter().sum()
}

/// Applies `f(index, &mut value)` to every element.
pub fn for_each_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize, &mut f64) + Sync + Send,
{
    let body = |(c, chunk): (usize, &mut [f64])| {
        let base = c * FLAT_CHUNK;
        for (k, v) in chunk.iter_mut().enumerate() {
            f(base + k, v);
        }
    };
    #[cfg(feature = "parallel")]
    if is_parallel() {
        out.par_chunks_mut(FLAT_CHUNK).enumerate().for_each(body);
        return;
    }
    out.chunks_mut(FLAT_CHUNK).enumerate().for_each(body);
}

/// Sums `f(i)` over `0..len` in fixed-size chunks combined in order.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(FLAT_CHUNK);
    let chunk_sum = |c: usize| -> f64 {
        let start = c * FLAT_CHUNK;
        let end = (start + FLAT_CHUNK).min(len);
        (start..end).map(&f).sum()
    };
    #[cfg(feature = "parallel")]
    if is_parallel() {
        let partial: Vec<f64> = (0..chunks).into_par_iter().map(chunk_sum).collect();
        return partial.iter().sum();
    }
    (0..chunks).map(chunk_sum).collect::<Vec<_>>().iter().sum()
}

/// Maximum of `f(i)` over `0..len`; `f64::NEG_INFINITY` when empty.
pub fn max_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return (0..len).into_par_iter().map(f).reduce(|| f64::NEG_INFINITY, f64::max);
    }
    (0..len).map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Maps `f` over `items`, preserving order. Used for coarse-grained jobs
/// such as the runs of a sweep.
pub fn map_items<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_agree_between_modes() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (i as f64 + 1.0);
        set_parallel(true);
        let a = sum_indexed(100_003, f);
        let r = sum_rows(517, f);
        set_parallel(false);
        let b = sum_indexed(100_003, f);
        let s = sum_rows(517, f);
        set_parallel(cfg!(feature = "parallel"));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(r.to_bits(), s.to_bits());
    }

    #[test]
    fn indexed_fill_covers_every_element() {
        let mut v = vec![0.0; 9000];
        for_each_indexed(&mut v, |i, x| *x = i as f64);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i as f64));
        assert_eq!(max_indexed(v.len(), |i| v[i]), 8999.0);
        assert_eq!(max_indexed(0, |_| 1.0), f64::NEG_INFINITY);
    }
}
