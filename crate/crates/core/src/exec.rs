//! Data-parallel execution helpers. With the `parallel` feature (the
//! default) the closures run on the rayon pool; without it they run
//! sequentially. Both paths visit indices in order-preserving fashion, so
//! results are bit-identical across feature settings and thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Caps the global worker pool. Must be called before any parallel work;
/// later calls (or a sequential build) are a no-op.
pub fn configure_workers(workers: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
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
        map_indexed_seq(n, f)
    }
}

/// Sequential twin of [`map_indexed`]; always available so benchmarks can
/// compare the two implementations in one binary.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Splits `buf` into equally sized chunks and fills each one from its chunk
/// index. The last chunk may be shorter.
pub fn fill_chunks<T, F>(buf: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk > 0);
    #[cfg(feature = "parallel")]
    {
        buf.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        fill_chunks_seq(buf, chunk, f);
    }
}

/// Sequential twin of [`fill_chunks`].
pub fn fill_chunks_seq<T, F>(buf: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    assert!(chunk > 0);
    buf.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_indexed(1000, |i| (i as f64).sin());
        let b = map_indexed_seq(1000, |i| (i as f64).sin());
        assert_eq!(a, b);
    }

    #[test]
    fn fill_chunks_covers_all() {
        let mut buf = vec![0usize; 10];
        fill_chunks(&mut buf, 3, |i, c| c.iter_mut().for_each(|v| *v = i + 1));
        assert_eq!(buf, vec![1, 1, 1, 2, 2, 2, 3, 3, 3, 4]);
    }
}
