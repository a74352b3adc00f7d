//! Worker-pool helpers. With the `parallel` feature, work is spread over a
//! rayon pool; otherwise, or with one worker, it runs in order on the
//! calling thread. Results are always returned in input order.

/// Number of workers to use for a request of `workers` (0 = all cores).
pub fn resolve_workers(workers: usize) -> usize {
    if workers > 0 {
        return workers;
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(workers: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let workers = resolve_workers(workers);
    if workers <= 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
        Err(_) => items.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(_workers: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        for w in [1, 2, 4] {
            let out = super::map(w, (0..100).collect(), |x: u32| x * x);
            assert_eq!(out, (0..100).map(|x| x * x).collect::<Vec<_>>());
        }
    }
}
