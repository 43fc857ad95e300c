//! Deterministic parallel primitives.
//!
//! Every reduction here uses a fixed chunking so the floating-point
//! summation order is identical whether the `parallel` feature is on or
//! off, and independent of the thread schedule. Parallel maps preserve
//! index order.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for pinned-order reductions.
const CHUNK: usize = 4096;

fn chunk_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Dot product with a pinned summation order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    {
        let partials: Vec<f64> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(ca, cb)| chunk_dot(ca, cb))
            .collect();
        partials.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut total = 0.0;
        for (ca, cb) in a.chunks(CHUNK).zip(b.chunks(CHUNK)) {
            total += chunk_dot(ca, cb);
        }
        total
    }
}

/// Euclidean norm via the pinned-order dot product.
pub fn norm2(a: &[f64]) -> f64 {
    crate::math::sqrt(dot(a, a))
}

/// Order-preserving parallel map over `0..n`.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fills `out[i] = f(i)` with each element computed independently.
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut()
            .enumerate()
            .for_each(|(i, slot)| *slot = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = f(i);
        }
    }
}

/// Fills `out` viewed as rows of `row_len`, one independent call per row.
pub fn fill_rows<F>(out: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    assert_eq!(out.len() % row_len, 0);
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in out.chunks_mut(row_len).enumerate() {
            f(i, row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_sequential_on_odd_lengths() {
        let a: Vec<f64> = (0..10_001).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..10_001).map(|i| (i as f64 * 0.5).cos()).collect();
        let reference = {
            let mut total = 0.0;
            for (ca, cb) in a.chunks(CHUNK).zip(b.chunks(CHUNK)) {
                total += chunk_dot(ca, cb);
            }
            total
        };
        assert_eq!(dot(&a, &b), reference);
    }

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(100, |i| i * i);
        assert_eq!(v[17], 289);
        assert_eq!(v.len(), 100);
    }
}
