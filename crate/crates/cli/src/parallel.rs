//! Deterministic fan-out over scoped threads: worker `w` handles indices
//! `w, w + threads, …`, results land by index, so the output is identical
//! for any thread count.

pub fn map_indexed<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(count.max(1));
    if threads <= 1 {
        return (0..count).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for worker in 0..threads {
            let f = &f;
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut index = worker;
                while index < count {
                    out.push((index, f(index)));
                    index += threads;
                }
                out
            }));
        }
        for handle in handles {
            for (index, value) in handle.join().expect("worker panicked") {
                slots[index] = Some(value);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("all indices filled")).collect()
}

/// Fallible variant; the error of the lowest failing index wins.
pub fn try_map_indexed<T, E, F>(count: usize, threads: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let results = map_indexed(count, threads, f);
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}
