use std::thread;

/// Maps `f` over `items` on up to `workers` threads, each taking one contiguous block.
/// The output order matches `items` whatever the worker count.
pub fn block_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let block = items.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(block)
            .map(|chunk| {
                let f = &f;
                s.spawn(move || chunk.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

/// Worker count from the flag, else the config, else `ECHOLAB_WORKERS`, else 1.
pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> usize {
    flag.or(config)
        .or_else(|| std::env::var("ECHOLAB_WORKERS").ok()?.trim().parse().ok())
        .unwrap_or(1)
        .max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let items: Vec<u64> = (0..37).collect();
        let serial = block_map(&items, 1, |x| x * x);
        for w in [2, 3, 8, 64] {
            assert_eq!(block_map(&items, w, |x| x * x), serial);
        }
        assert!(block_map(&[] as &[u64], 4, |x| *x).is_empty());
    }

    #[test]
    fn flag_beats_config() {
        assert_eq!(resolve_workers(Some(3), Some(2)), 3);
        assert_eq!(resolve_workers(None, Some(2)), 2);
        assert_eq!(resolve_workers(Some(0), None), 1);
    }
}
