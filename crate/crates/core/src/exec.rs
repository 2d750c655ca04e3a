//! Worker-based execution model.
//!
//! All parallel kernels split their index space into contiguous chunks whose
//! shape depends only on the length and the worker count. Each chunk is
//! computed sequentially, and chunk results are combined in chunk order, so
//! results are bitwise reproducible for a fixed worker count regardless of
//! how the chunks are scheduled. Chunks are dispatched onto a shared
//! persistent thread pool; the worker count caps concurrency through the
//! chunk count, never through the pool size.

use std::ops::Range;
use std::sync::OnceLock;

use rayon::prelude::*;

/// Below this many elements a kernel runs its chunks on the calling thread.
/// The chunk shapes (and therefore the results) do not change.
const SPAWN_THRESHOLD: usize = 16 * 1024;

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .thread_name(|i| format!("sparsekit-{i}"))
            .build()
            .expect("worker pool")
    })
}

/// Execution context: the number of workers available to a kernel.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Exec {
    workers: usize,
}

impl Exec {
    /// Single-threaded execution.
    pub fn serial() -> Self {
        Exec { workers: 1 }
    }

    /// Execution with `workers` threads (at least 1).
    pub fn with_workers(workers: usize) -> Self {
        assert!(workers >= 1, "worker count must be at least 1");
        Exec { workers }
    }

    pub fn workers(self) -> usize {
        self.workers
    }

    /// Contiguous chunk ranges covering `0..len`. At most `workers` chunks,
    /// sizes differing by at most one. The shape is a pure function of
    /// `(len, workers)`.
    pub fn chunk_ranges(self, len: usize) -> Vec<Range<usize>> {
        let n_chunks = self.workers.min(len).max(1);
        let base = len / n_chunks;
        let rem = len % n_chunks;
        let mut ranges = Vec::with_capacity(n_chunks);
        let mut start = 0;
        for c in 0..n_chunks {
            let size = base + usize::from(c < rem);
            ranges.push(start..start + size);
            start += size;
        }
        ranges
    }
}

impl Default for Exec {
    fn default() -> Self {
        Exec::serial()
    }
}

/// Runs `f` once per chunk of `0..len` and collects the results in chunk
/// order.
pub fn map_chunks<T, F>(exec: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let ranges = exec.chunk_ranges(len);
    if ranges.len() <= 1 || len < SPAWN_THRESHOLD {
        return ranges.into_iter().map(&f).collect();
    }
    pool().install(|| ranges.into_par_iter().map(&f).collect())
}

/// Splits `out` into the chunk layout of `exec` and hands each worker its
/// disjoint slice together with the covered range. Writes never overlap.
pub fn for_each_chunk_mut<F>(exec: Exec, out: &mut [f64], f: F)
where
    F: Fn(Range<usize>, &mut [f64]) + Sync,
{
    let len = out.len();
    let ranges = exec.chunk_ranges(len);
    if ranges.len() <= 1 || len < SPAWN_THRESHOLD {
        for range in ranges {
            let (start, end) = (range.start, range.end);
            f(range, &mut out[start..end]);
        }
        return;
    }
    let mut pieces = Vec::with_capacity(ranges.len());
    let mut rest = out;
    for range in ranges {
        let (chunk, tail) = rest.split_at_mut(range.len());
        pieces.push((range, chunk));
        rest = tail;
    }
    pool().install(|| {
        pieces
            .into_par_iter()
            .for_each(|(range, chunk)| f(range, chunk));
    });
}

/// Runs `f(index, item)` for a list of independently owned work items
/// (used for per-partition compute; items carry their disjoint output
/// slices). Items are grouped into at most `workers` batches processed in
/// order within each batch.
pub fn for_each_part<T, F>(exec: Exec, items: Vec<T>, f: F)
where
    T: Send,
    F: Fn(usize, T) + Sync,
{
    let n = items.len();
    if exec.workers() == 1 || n <= 1 {
        for (q, item) in items.into_iter().enumerate() {
            f(q, item);
        }
        return;
    }
    let ranges = exec.chunk_ranges(n);
    let mut groups: Vec<Vec<(usize, T)>> = Vec::with_capacity(ranges.len());
    let mut it = items.into_iter().enumerate();
    for r in &ranges {
        let mut group = Vec::with_capacity(r.len());
        for _ in r.clone() {
            group.push(it.next().expect("chunk ranges cover all items"));
        }
        groups.push(group);
    }
    pool().install(|| {
        groups.into_par_iter().for_each(|group| {
            for (q, item) in group {
                f(q, item);
            }
        });
    });
}

/// Deterministic parallel sum: per-chunk sequential partial sums combined in
/// chunk order.
pub fn sum_chunked<F>(exec: Exec, len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials = map_chunks(exec, len, |range| {
        let mut acc = 0.0;
        for i in range {
            acc += term(i);
        }
        acc
    });
    partials.into_iter().sum()
}

/// Evaluates `compute(i, x)` for a set of independent rows and writes each
/// result to `x[i]`. The rows must not read each other's entries; per-row
/// arithmetic is identical at any worker count, so results are bitwise
/// stable.
pub(crate) fn scatter_rows<F>(rows: &[usize], compute: F, x: &mut [f64], exec: Exec)
where
    F: Fn(usize, &[f64]) -> f64 + Sync,
{
    if exec.workers() == 1 || rows.len() < 2 {
        for &i in rows {
            let v = compute(i, x);
            x[i] = v;
        }
        return;
    }
    let updates = {
        let shared: &[f64] = x;
        map_chunks(exec, rows.len(), |range| {
            range.map(|t| compute(rows[t], shared)).collect::<Vec<f64>>()
        })
    };
    let mut t = 0;
    for chunk in updates {
        for v in chunk {
            x[rows[t]] = v;
            t += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_ranges_cover_and_balance() {
        for len in [0usize, 1, 5, 17, 4096, 100_001] {
            for workers in [1usize, 2, 3, 4, 13] {
                let ranges = Exec::with_workers(workers).chunk_ranges(len);
                let mut next = 0;
                for r in &ranges {
                    assert_eq!(r.start, next);
                    next = r.end;
                }
                assert_eq!(next, len);
                if !ranges.is_empty() {
                    let min = ranges.iter().map(|r| r.len()).min().unwrap();
                    let max = ranges.iter().map(|r| r.len()).max().unwrap();
                    assert!(max - min <= 1);
                }
            }
        }
    }

    #[test]
    fn chunked_sum_is_deterministic() {
        let data: Vec<f64> = (0..120_000).map(|i| (i as f64) * 0.3125 - 7.0).collect();
        let exec = Exec::with_workers(4);
        let a = sum_chunked(exec, data.len(), |i| data[i]);
        for _ in 0..5 {
            let b = sum_chunked(exec, data.len(), |i| data[i]);
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn parallel_sum_matches_serial_chunk_shapes() {
        // shapes depend on (len, workers) only, so the serial fallback
        // below the spawn threshold must agree with the pooled path
        let data: Vec<f64> = (0..50_000).map(|i| ((i * 37) % 101) as f64 - 50.0).collect();
        for workers in [2usize, 4, 7] {
            let exec = Exec::with_workers(workers);
            let pooled = sum_chunked(exec, data.len(), |i| data[i]);
            let serial: f64 = exec
                .chunk_ranges(data.len())
                .into_iter()
                .map(|r| r.map(|i| data[i]).sum::<f64>())
                .sum();
            assert_eq!(pooled.to_bits(), serial.to_bits());
        }
    }

    #[test]
    fn for_each_chunk_mut_writes_disjoint() {
        let mut out = vec![0.0; 100_000];
        for_each_chunk_mut(Exec::with_workers(4), &mut out, |range, chunk| {
            for (k, i) in range.enumerate() {
                chunk[k] = i as f64;
            }
        });
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i as f64);
        }
    }

    #[test]
    fn for_each_part_consumes_every_item() {
        use std::sync::atomic::{AtomicU64, Ordering};
        let flags: Vec<AtomicU64> = (0..37).map(|_| AtomicU64::new(0)).collect();
        let items: Vec<usize> = (0..37).collect();
        for_each_part(Exec::with_workers(4), items, |q, item| {
            assert_eq!(q, item);
            flags[item].fetch_add(1, Ordering::SeqCst);
        });
        assert!(flags.iter().all(|f| f.load(Ordering::SeqCst) == 1));
    }
}
