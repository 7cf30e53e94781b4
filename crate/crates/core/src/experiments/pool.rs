//! Bounded worker pool over independent grid points.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

/// Applies `job` to every item on at most `workers` threads. Each thread owns
/// one state made by `init`; results come back in item order.
pub(crate) fn map_indexed<T, S, R>(
    items: &[T],
    workers: usize,
    init: impl Fn() -> S + Sync,
    job: impl Fn(&mut S, usize, &T) -> R + Sync,
) -> Vec<R>
where
    T: Sync,
    R: Send,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        let mut state = init();
        return items
            .iter()
            .enumerate()
            .map(|(i, t)| job(&mut state, i, t))
            .collect();
    }
    let next = AtomicUsize::new(0);
    let parts: Vec<Vec<(usize, R)>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut state = init();
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break done;
                        }
                        done.push((i, job(&mut state, i, &items[i])));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    for (i, r) in parts.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_worker_count() {
        let items: Vec<u64> = (0..37).collect();
        let serial = map_indexed(
            &items,
            1,
            || 0u64,
            |calls, i, &x| {
                *calls += 1;
                (i as u64) * 1000 + x * x
            },
        );
        for workers in [2, 4, 64] {
            let parallel = map_indexed(
                &items,
                workers,
                || 0u64,
                |_, i, &x| (i as u64) * 1000 + x * x,
            );
            assert_eq!(parallel, serial);
        }
        assert!(map_indexed(&[] as &[u8], 4, || (), |_, _, _| 0).is_empty());
    }
}
