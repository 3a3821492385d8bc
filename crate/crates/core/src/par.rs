//! Data-parallel loops used by the matvec kernels and the verification
//! batches. With the `parallel` feature these dispatch to rayon; without it
//! they run the same closures sequentially.
//!
//! Reductions always split their input into fixed-size blocks and add the
//! block partials in order, so results are bitwise identical regardless of
//! the thread count or whether the feature is enabled.

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Block length for ordered reductions.
pub const REDUCE_BLOCK: usize = 2048;

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Calls `f(i, chunk)` for every `chunk`-sized piece of `out`.
pub fn for_each_chunk<T, F>(out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sum of `f(range)` over consecutive blocks of `0..len`, added in block order.
pub fn ordered_sum<F>(len: usize, f: F) -> Complex64
where
    F: Fn(std::ops::Range<usize>) -> Complex64 + Sync + Send,
{
    let blocks = len.div_ceil(REDUCE_BLOCK);
    if blocks <= 1 {
        return f(0..len);
    }
    let partials = map_range(blocks, |b| {
        let start = b * REDUCE_BLOCK;
        f(start..(start + REDUCE_BLOCK).min(len))
    });
    partials.into_iter().fold(Complex64::new(0.0, 0.0), |acc, p| acc + p)
}
