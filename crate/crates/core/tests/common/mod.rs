//! Dense reference constructions shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinforge::{Pauli, StateVector};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_dmatrix(m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// `⊗_k m_k` with site 0 as the least significant bit.
pub fn kron_sites(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    factors.iter().rev().skip(1).fold(factors.last().unwrap().clone(), |acc, f| kron(&acc, f))
}

/// Dense matrix of `σ_a(site)` embedded in `n` sites.
pub fn site_op(n: usize, site: usize, m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    let f: Vec<_> = (0..n).map(|k| if k == site { to_dmatrix(m) } else { DMatrix::identity(2, 2) }).collect();
    kron_sites(&f)
}

pub fn pauli_op(n: usize, site: usize, p: Pauli) -> DMatrix<Complex64> {
    site_op(n, site, &p.matrix())
}

/// `s² σ_a(i) σ_b(j)` as a dense product of embedded single-site operators.
pub fn pair(n: usize, i: usize, a: Pauli, j: usize, b: Pauli, scale: f64) -> DMatrix<Complex64> {
    pauli_op(n, i, a) * pauli_op(n, j, b) * c(scale * scale, 0.0)
}

/// `exp(-iHt)` through a Hermitian eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let e = SymmetricEigen::new((h + h.adjoint()) * c(0.5, 0.0));
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

pub fn random_amplitudes(r: &mut ChaCha8Rng, dim: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..dim).map(|_| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn random_state(r: &mut ChaCha8Rng, n: usize) -> StateVector {
    StateVector::from_amplitudes(n, random_amplitudes(r, 1 << n)).unwrap()
}

pub fn as_vector(psi: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(psi.amplitudes())
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_matrix_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `exp(-iHt)` by scaling and squaring of a truncated Taylor series.
pub fn expm_taylor(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let a = h * c(0.0, -t);
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = a / c(f64::powi(2.0, s), 0.0);
    let dim = h.nrows();
    let mut term = DMatrix::<Complex64>::identity(dim, dim);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}
