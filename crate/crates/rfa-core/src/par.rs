//! Thin wrappers over the data-parallel primitives used by the crate.
//!
//! With the default `parallel` feature these dispatch to rayon; without it
//! they run the same closures sequentially. Every call site hands out
//! disjoint output slots per work item and performs final reductions
//! sequentially, so the numeric output is bit-identical for any thread count
//! (and for the sequential build).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f(index, chunk)` to consecutive disjoint chunks of `data`.
pub fn for_each_chunk<F>(data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Maps `f` over `0..len`, collecting results in index order.
pub fn map_indexed<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Runs `f` inside a thread pool capped at `threads` workers. `None` keeps
/// the default pool. The sequential build accepts and ignores the cap.
pub fn run_with_threads<T, F>(threads: Option<usize>, f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("failed to build thread pool")
                .install(f),
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_cover_all_rows() {
        let mut data = vec![0.0; 12];
        for_each_chunk(&mut data, 3, |i, c| {
            for (j, x) in c.iter_mut().enumerate() {
                *x = (i * 10 + j) as f64;
            }
        });
        assert_eq!(data[0], 0.0);
        assert_eq!(data[3], 10.0);
        assert_eq!(data[11], 32.0);
    }

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }

    #[test]
    fn thread_cap_does_not_change_results() {
        let run = || {
            let mut data = vec![0.0; 64];
            for_each_chunk(&mut data, 4, |i, c| {
                for (j, x) in c.iter_mut().enumerate() {
                    *x = ((i + 1) * (j + 3)) as f64 / 7.0;
                }
            });
            data
        };
        let a = run_with_threads(Some(1), run);
        let b = run_with_threads(Some(8), run);
        assert_eq!(a, b);
    }
}
