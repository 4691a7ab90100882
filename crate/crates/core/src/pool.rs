use rayon::ThreadPoolBuilder;

/// Runs `f` on a dedicated pool of `jobs` workers (at least one).
///
/// Results never depend on `jobs`: callers collect with order-preserving
/// parallel iterators and merge in canonical order.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(f)
}
