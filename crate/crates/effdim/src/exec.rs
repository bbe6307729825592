//! Deterministic chunked parallelism.
//!
//! Work is split into fixed-size chunks that are claimed by worker threads
//! through an atomic counter; partial results are stored by chunk index and
//! reduced in index order. Results are therefore bit-identical for any thread
//! count, including 1. `EFFDIM_THREADS` caps the worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

pub fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("EFFDIM_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Apply `work` to every chunk `[k*chunk_size, min((k+1)*chunk_size, total))`
/// and return the per-chunk results in chunk order.
pub fn run_chunked<T, F>(total: usize, chunk_size: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    assert!(chunk_size > 0);
    let n_chunks = total.div_ceil(chunk_size);
    if n_chunks == 0 {
        return Vec::new();
    }
    let threads = thread_cap().min(n_chunks);
    if threads <= 1 {
        return (0..n_chunks)
            .map(|k| work(k * chunk_size..total.min((k + 1) * chunk_size)))
            .collect();
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n_chunks).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n_chunks {
                    break;
                }
                let out = work(k * chunk_size..total.min((k + 1) * chunk_size));
                slots.lock().unwrap()[k] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("chunk result missing"))
        .collect()
}
