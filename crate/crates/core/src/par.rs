//! Grid-loop parallelism capped by the `ALLAB_THREADS` environment variable.

use std::num::NonZeroUsize;
use std::thread;

/// Worker count: `ALLAB_THREADS` if set and positive, otherwise the number of
/// available cores.
pub fn threads() -> usize {
    let available = thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var("ALLAB_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => available,
    }
}

/// Evaluates `f(i)` for `i in 0..n`, results in index order.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = threads().min(n.max(1));
    if workers <= 1 || n < 256 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    let f = &f;
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let lo = (w * chunk).min(n);
                    let hi = ((w + 1) * chunk).min(n);
                    (lo..hi).map(f).collect::<Vec<T>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("grid worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    #[test]
    fn preserves_order() {
        let out = super::map_indices(1000, |i| i * 2);
        assert_eq!(out.len(), 1000);
        assert!(out.iter().enumerate().all(|(i, v)| *v == 2 * i));
    }
}
