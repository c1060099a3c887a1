//! Deterministic reductions.
//!
//! Every large sum in this crate goes through pairwise (tree) summation with a
//! fixed chunk size of 1024. Chunk partials are produced in index order and
//! combined by halving passes, so a reduction is a pure function of the value
//! sequence: thread count and scheduling cannot change the result.

use num_complex::Complex64;
use rayon::prelude::*;

/// Values inside a chunk are added naively; chunks beyond this size go through
/// the tree combiner.
pub const CHUNK: usize = 1024;

pub trait Accumulable: Copy + Send + std::ops::Add<Output = Self> {
    const ZERO: Self;
}

impl Accumulable for f64 {
    const ZERO: Self = 0.0;
}

impl Accumulable for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
}

fn combine_partials<T: Accumulable>(mut parts: Vec<T>) -> T {
    if parts.is_empty() {
        return T::ZERO;
    }
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
            .collect();
    }
    parts[0]
}

/// Pairwise sum of a slice: naive within 1024-element chunks, tree above.
pub fn pairwise_sum<T: Accumulable>(xs: &[T]) -> T {
    let parts: Vec<T> = xs
        .chunks(CHUNK)
        .map(|c| {
            let mut s = T::ZERO;
            for &v in c {
                s = s + v;
            }
            s
        })
        .collect();
    combine_partials(parts)
}

/// Streaming variant of [`pairwise_sum`] for values that are never
/// materialized. Chunk sums are merged in binary-counter order, which is again
/// a pure function of the sequence.
pub struct Cascade<T: Accumulable> {
    cur: T,
    cur_n: usize,
    stack: Vec<Option<T>>,
}

impl<T: Accumulable> Cascade<T> {
    pub fn new() -> Self {
        Cascade { cur: T::ZERO, cur_n: 0, stack: Vec::new() }
    }

    #[inline]
    pub fn push(&mut self, v: T) {
        self.cur = self.cur + v;
        self.cur_n += 1;
        if self.cur_n == CHUNK {
            let b = self.cur;
            self.cur = T::ZERO;
            self.cur_n = 0;
            self.push_block(b);
        }
    }

    fn push_block(&mut self, mut b: T) {
        for slot in self.stack.iter_mut() {
            match slot.take() {
                None => {
                    *slot = Some(b);
                    return;
                }
                // older block stays on the left to keep associativity fixed
                Some(s) => b = s + b,
            }
        }
        self.stack.push(Some(b));
    }

    pub fn finish(self) -> T {
        let mut acc = self.cur;
        for s in self.stack.into_iter().flatten() {
            acc = s + acc;
        }
        acc
    }
}

impl<T: Accumulable> Default for Cascade<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Deterministic parallel reduction over an index range: `f(i)` partials are
/// computed in parallel, collected in index order, and tree-combined. The
/// result does not depend on the rayon pool size.
pub fn par_sum_by_index<T, F>(n: usize, f: F) -> T
where
    T: Accumulable,
    F: Fn(usize) -> T + Sync + Send,
{
    let parts: Vec<T> = (0..n).into_par_iter().map(f).collect();
    combine_partials(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.25).collect();
        let naive: f64 = xs.iter().sum();
        assert_eq!(pairwise_sum(&xs), naive);
    }

    #[test]
    fn cascade_deterministic_and_close_to_exact() {
        let xs: Vec<f64> = (0..50_000).map(|i| ((i * 37) % 101) as f64 * 1e-3 + 1.0).collect();
        let mut c1 = Cascade::new();
        let mut c2 = Cascade::new();
        for &v in &xs {
            c1.push(v);
            c2.push(v);
        }
        let a = c1.finish();
        let b = c2.finish();
        assert_eq!(a.to_bits(), b.to_bits());
        let exact: f64 = xs.iter().map(|&v| v as f64).sum();
        assert!((a - exact).abs() / exact < 1e-12);
    }

    #[test]
    fn par_sum_independent_of_pool_size() {
        let f = |i: usize| (i as f64).sqrt();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| par_sum_by_index(200_000, f))
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }
}
