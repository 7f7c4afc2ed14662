//! Deterministic fan-out over item indices.
//!
//! Work is split into contiguous index ranges across scoped threads and
//! every result lands at its own index, so the output is identical for any
//! thread count as long as the worker is a pure function of the index.

/// Evaluate `f(0..n)` on up to `threads` threads, results in index order.
pub fn parallel_map<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let workers = threads.min(n);
    let chunk = n.div_ceil(workers);
    let mut results: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, slice) in results.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (offset, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(w * chunk + offset));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.expect("every index visited"))
        .collect()
}
