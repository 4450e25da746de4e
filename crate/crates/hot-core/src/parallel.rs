//! Data-parallel loop helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) these fan work out over rayon;
//! without it they run plain sequential loops. Both paths apply the same
//! closure to the same inputs in the same output order, so results are
//! bit-identical either way — callers never need to care which one ran.

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Like [`map_indexed`] but short-circuits on the first error.
pub fn try_map_indexed<U, E, F>(n: usize, f: F) -> Result<Vec<U>, E>
where
    U: Send,
    E: Send,
    F: Fn(usize) -> Result<U, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Runs `f` with worker parallelism capped at `threads` (when the `parallel`
/// feature is enabled; otherwise `f` just runs on the calling thread).
/// `None` leaves the global thread pool in charge.
pub fn with_max_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("building a local thread pool cannot fail with valid size")
                .install(f),
            _ => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
