//! Thin indirection over rayon so the crate builds with a sequential fallback
//! (`--no-default-features`). Outputs are positional, so parallel and
//! sequential execution produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `0..n` and collects in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies `f` to equal-length chunks of `buf` (the last may be shorter),
/// passing the chunk index.
pub(crate) fn for_each_chunk_mut<F>(buf: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        buf.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        buf.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Maximum over `0..n` of a nonnegative score; deterministic because `max`
/// is associative and commutative.
pub(crate) fn max_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(0.0, f64::max)
    }
}
