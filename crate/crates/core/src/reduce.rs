//! Reductions over amplitude arrays with a fixed summation tree.
//!
//! Every reduction splits its input into [`CHUNK`]-sized blocks, sums each
//! block sequentially and then folds the block sums in index order. The block
//! layout depends only on the input length, so the result is bitwise identical
//! for any rayon thread count.

use num_complex::Complex64;
use rayon::prelude::*;

/// Block length for reductions and parallel kernels.
pub const CHUNK: usize = 4096;

/// Below this length kernels run on the calling thread.
pub(crate) const PAR_THRESHOLD: usize = 1 << 13;

/// `sum_i f(i)` over `0..len` with a thread-count independent summation order.
pub(crate) fn sum_indexed<T, F>(len: usize, f: F) -> T
where
    T: Send + Copy + std::iter::Sum<T> + std::ops::Add<Output = T> + Default,
    F: Fn(usize) -> T + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let block = |c: usize| -> T {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(len);
        let mut acc = T::default();
        for i in start..end {
            acc = acc + f(i);
        }
        acc
    };
    let partials: Vec<T> = if len >= PAR_THRESHOLD {
        (0..n_chunks).into_par_iter().map(block).collect()
    } else {
        (0..n_chunks).map(block).collect()
    };
    partials.into_iter().fold(T::default(), |a, b| a + b)
}

/// `⟨a|b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    sum_indexed(a.len(), |i| a[i].conj() * b[i])
}

/// `Σ |a_i|²`.
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    sum_indexed(a.len(), |i| a[i].norm_sqr())
}

/// `y ← y + alpha·x`, elementwise (no reduction, trivially reproducible).
pub(crate) fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    if y.len() >= PAR_THRESHOLD {
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, block)| {
            let base = c * CHUNK;
            for (k, v) in block.iter_mut().enumerate() {
                *v += alpha * x[base + k];
            }
        });
    } else {
        for (v, &xi) in y.iter_mut().zip(x) {
            *v += alpha * xi;
        }
    }
}

pub(crate) fn scale(alpha: Complex64, x: &mut [Complex64]) {
    if x.len() >= PAR_THRESHOLD {
        x.par_iter_mut().for_each(|v| *v *= alpha);
    } else {
        x.iter_mut().for_each(|v| *v *= alpha);
    }
}
