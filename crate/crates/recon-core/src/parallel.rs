//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature these dispatch to rayon; without it
//! they run plain sequential loops. Callers only hand over independent
//! per-index work that writes disjoint outputs, so results are identical in
//! both modes and for any worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `0..n` to a vector, in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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

/// Run `f(index, chunk)` over equally sized mutable chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk_len > 0 && data.len() % chunk_len == 0);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
    }
}
