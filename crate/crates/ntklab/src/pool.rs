//! A bounded worker pool over independent tasks. Results land in a slot per
//! task index, so the output is identical for every thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Runs `f(i)` for every task index on up to `threads` workers and returns
/// the results in task order.
pub fn run_indexed<T, F>(tasks: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(tasks.max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..tasks).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= tasks {
                    break;
                }
                let out = f(i);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every task ran"))
        .collect()
}

/// The worker count: NTKLAB_THREADS overrides the CLI flag, which overrides
/// the machine's available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    if let Ok(env) = std::env::var("NTKLAB_THREADS") {
        if let Ok(v) = env.trim().parse::<usize>() {
            if v >= 1 {
                return v;
            }
        }
    }
    if let Some(v) = flag {
        return v.max(1);
    }
    std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_task_order_for_any_thread_count() {
        let single = run_indexed(37, 1, |i| i * i);
        let multi = run_indexed(37, 4, |i| i * i);
        assert_eq!(single, multi);
        assert_eq!(single[5], 25);
    }
}
