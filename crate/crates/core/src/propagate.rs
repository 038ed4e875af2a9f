//! Time evolution `ψ(t) = exp(-iHt)ψ` for `H` given in angular-frequency units.
//!
//! Small registers use a dense eigendecomposition; larger ones use a Lanczos
//! (Krylov) approximation with an a-posteriori error bound.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{CompiledOperator, OperatorSum, DENSE_MAX_SITES};
use crate::reduce;
use crate::state::StateVector;

/// Gram–Schmidt passes per Lanczos vector before declaring breakdown.
const MAX_REORTH_PASSES: usize = 4;
/// A pass that keeps less than this fraction of the vector is repeated.
const REORTH_KEEP: f64 = 0.7;
const TAYLOR_EXTRA_TERMS: usize = 20;

/// Largest register diagonalized densely by [`Method::Auto`].
pub const DENSE_AUTO_MAX_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense up to [`EvolveOptions::dense_max_sites`], Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    pub dense_max_sites: usize,
    /// Krylov error tolerance per unit of evolved time fraction.
    pub tol: f64,
    pub max_krylov_dim: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, dense_max_sites: DENSE_AUTO_MAX_SITES, tol: 1e-10, max_krylov_dim: 40 }
    }
}

impl EvolveOptions {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }
}

/// Reusable `exp(-iHt)` for a fixed Hamiltonian.
#[derive(Debug)]
pub struct Propagator {
    n_sites: usize,
    kind: Kind,
}

#[derive(Debug)]
enum Kind {
    Zero,
    Dense(DenseEig),
    Krylov(Krylov),
}

impl Propagator {
    pub fn new(h: &OperatorSum, opts: &EvolveOptions) -> Result<Self> {
        h.ensure_hermitian()?;
        let h = h.simplify();
        let n_sites = h.n_sites();
        let dense = match opts.method {
            Method::Auto => n_sites <= opts.dense_max_sites,
            Method::Dense => true,
            Method::Krylov => false,
        };
        let kind = if h.is_empty() {
            Kind::Zero
        } else if dense {
            Kind::Dense(DenseEig::new(&h)?)
        } else {
            Kind::Krylov(Krylov::new(&h, opts)?)
        };
        Ok(Self { n_sites, kind })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.kind, Kind::Dense(_))
    }

    /// `exp(-iHt) ψ`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: psi.n_sites() });
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("evolution time must be finite, got {t}")));
        }
        if t == 0.0 {
            return Ok(psi.clone());
        }
        let amps = match &self.kind {
            Kind::Zero => return Ok(psi.clone()),
            Kind::Dense(d) => d.evolve(psi.amplitudes(), t),
            Kind::Krylov(k) => k.evolve(psi.amplitudes(), t)?,
        };
        Ok(StateVector::from_raw(self.n_sites, amps))
    }
}

/// One-shot `exp(-iHt) ψ` with default options.
pub fn evolve(psi: &StateVector, h: &OperatorSum, t: f64) -> Result<StateVector> {
    Propagator::new(h, &EvolveOptions::default())?.evolve(psi, t)
}

#[derive(Debug)]
enum Eigvecs {
    Real(Mat<f64>),
    Complex(Mat<Complex64>),
}

/// Eigendecomposition of `H` restricted to a set of basis states it leaves invariant.
#[derive(Debug)]
struct Block {
    states: Vec<usize>,
    values: Vec<f64>,
    vectors: Eigvecs,
}

/// Dense eigendecomposition, split into total-magnetization sectors when `H`
/// conserves `Σσ_z`.
#[derive(Debug)]
struct DenseEig {
    blocks: Vec<Block>,
}

impl DenseEig {
    fn new(h: &OperatorSum) -> Result<Self> {
        let n = h.n_sites();
        let dim = 1usize << n;
        let sectors: Vec<Vec<usize>> = if h.conserves_total_z() {
            (0..=n as u32).map(|k| (0..dim).filter(|i| i.count_ones() == k).collect()).collect()
        } else {
            vec![(0..dim).collect()]
        };
        let largest = sectors.iter().map(Vec::len).max().unwrap_or(0);
        if largest > 1 << DENSE_MAX_SITES {
            return Err(Error::DenseLimit { n_sites: n, max: DENSE_MAX_SITES });
        }
        let op = h.compile();
        let real = h.terms().iter().all(|t| t.phase_coeff().im == 0.0);
        let blocks = sectors
            .into_par_iter()
            .map(|states| Block::new(&op, states, real))
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let parts: Vec<Vec<Complex64>> = self.blocks.par_iter().map(|b| b.evolve(psi, t)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (b, part) in self.blocks.iter().zip(parts) {
            for (&i, v) in b.states.iter().zip(part) {
                out[i] = v;
            }
        }
        out
    }
}

impl Block {
    fn new(op: &CompiledOperator, states: Vec<usize>, real: bool) -> Result<Self> {
        let d = states.len();
        let mut pos = std::collections::HashMap::with_capacity(d);
        for (p, &s) in states.iter().enumerate() {
            pos.insert(s, p);
        }
        let mut m = Mat::<Complex64>::zeros(d, d);
        for (r, &s) in states.iter().enumerate() {
            for (col, v) in op.row(s) {
                if let Some(&c) = pos.get(&col) {
                    m[(r, c)] += v;
                }
            }
        }
        let eig_err = |e| Error::InvalidParameter(format!("eigendecomposition failed: {e:?}"));
        let (values, vectors) = if real {
            let a = Mat::<f64>::from_fn(d, d, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
            let e = a.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
            ((0..d).map(|k| e.S().column_vector()[k]).collect(), Eigvecs::Real(e.U().to_owned()))
        } else {
            let a = Mat::<Complex64>::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
            let e = a.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
            ((0..d).map(|k| e.S().column_vector()[k].re).collect(), Eigvecs::Complex(e.U().to_owned()))
        };
        Ok(Self { states, values, vectors })
    }

    /// Amplitudes of `exp(-iHt)ψ` on this block's states.
    fn evolve(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let d = self.states.len();
        let amp = |i: usize| psi[self.states[i]];
        let phase = |k: usize| Complex64::from_polar(1.0, -self.values[k] * t);
        // Sequential kernels keep the result independent of the thread count.
        match &self.vectors {
            Eigvecs::Real(v) => {
                let x = Mat::<f64>::from_fn(d, 2, |i, j| if j == 0 { amp(i).re } else { amp(i).im });
                let mut c = Mat::<f64>::zeros(d, 2);
                matmul(&mut c, Accum::Replace, v.transpose(), &x, 1.0, Par::Seq);
                for k in 0..d {
                    let z = Complex64::new(c[(k, 0)], c[(k, 1)]) * phase(k);
                    c[(k, 0)] = z.re;
                    c[(k, 1)] = z.im;
                }
                let mut y = Mat::<f64>::zeros(d, 2);
                matmul(&mut y, Accum::Replace, v, &c, 1.0, Par::Seq);
                (0..d).map(|i| Complex64::new(y[(i, 0)], y[(i, 1)])).collect()
            }
            Eigvecs::Complex(v) => {
                let x = Mat::<Complex64>::from_fn(d, 1, |i, _| amp(i));
                let mut c = Mat::<Complex64>::zeros(d, 1);
                matmul(&mut c, Accum::Replace, v.adjoint(), &x, Complex64::new(1.0, 0.0), Par::Seq);
                for k in 0..d {
                    c[(k, 0)] *= phase(k);
                }
                let mut y = Mat::<Complex64>::zeros(d, 1);
                matmul(&mut y, Accum::Replace, v, &c, Complex64::new(1.0, 0.0), Par::Seq);
                (0..d).map(|i| y[(i, 0)]).collect()
            }
        }
    }
}

#[derive(Debug)]
struct Krylov {
    op: CompiledOperator,
    tol: f64,
    max_dim: usize,
}

impl Krylov {
    fn new(h: &OperatorSum, opts: &EvolveOptions) -> Result<Self> {
        if opts.max_krylov_dim < 2 {
            return Err(Error::InvalidParameter("Krylov dimension must be at least 2".into()));
        }
        if opts.tol.is_nan() || opts.tol <= 0.0 {
            return Err(Error::InvalidParameter("Krylov tolerance must be positive".into()));
        }
        Ok(Self { op: h.compile(), tol: opts.tol, max_dim: opts.max_krylov_dim })
    }

    fn evolve(&self, psi: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let mut cur = psi.to_vec();
        let mut done = 0.0;
        while done < t.abs() {
            let remaining = t.abs() - done;
            let step = self.step(&mut cur, remaining.copysign(t), t.abs())?;
            done += step.abs();
            if remaining - step.abs() <= 1e-15 * t.abs() {
                break;
            }
        }
        Ok(cur)
    }

    /// Advances `v` by at most `tau`; returns the time actually taken.
    fn step(&self, v: &mut Vec<Complex64>, tau: f64, total: f64) -> Result<f64> {
        let beta0 = reduce::norm_sqr(v).sqrt();
        if beta0 == 0.0 {
            return Ok(tau);
        }
        let dim = v.len();
        let max_dim = self.max_dim.min(dim);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_dim + 1);
        let mut first = v.clone();
        reduce::scale(Complex64::new(1.0 / beta0, 0.0), &mut first);
        basis.push(first);
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let happy = 1e-13 * self.op.norm_bound().max(f64::MIN_POSITIVE);

        for j in 0..max_dim {
            self.op.apply_into(&basis[j], &mut w);
            alpha.push(reduce::inner(&basis[j], &w).re);
            // Classical Gram–Schmidt against the whole basis, repeated while a
            // pass removes most of the vector.
            let mut b_next = reduce::norm_sqr(&w).sqrt();
            let mut exhausted = b_next <= happy;
            for pass in 0..MAX_REORTH_PASSES {
                if exhausted {
                    break;
                }
                for b in &basis {
                    let c = reduce::inner(b, &w);
                    reduce::axpy(-c, b, &mut w);
                }
                let before = b_next;
                b_next = reduce::norm_sqr(&w).sqrt();
                exhausted = b_next <= happy;
                if pass >= 1 && b_next > REORTH_KEEP * before {
                    break;
                }
                if pass + 1 == MAX_REORTH_PASSES && b_next <= REORTH_KEEP * before {
                    // Still collapsing: w is rounding noise inside the current span.
                    exhausted = true;
                }
            }
            let m = j + 1;
            let small = TridiagonalExp::new(&alpha, &beta);
            let accepted = if exhausted || m == dim {
                Some(tau)
            } else {
                // a-posteriori bound: β_m |e_m^T exp(-iTτ) e_1|
                let fits = |s: f64| b_next * small.coefficients(s)[m - 1].norm() <= self.tol * s.abs() / total;
                if fits(tau) {
                    Some(tau)
                } else if m == max_dim {
                    let mut s = tau;
                    while !fits(s) {
                        s *= 0.5;
                        if s.abs() < 1e-300 {
                            return Err(Error::InvalidParameter("Krylov step size underflow".into()));
                        }
                    }
                    Some(s)
                } else {
                    None
                }
            };
            if let Some(s) = accepted {
                let c = small.coefficients(s);
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                for (k, b) in basis.iter().enumerate() {
                    reduce::axpy(c[k] * beta0, b, &mut out);
                }
                *v = out;
                return Ok(s);
            }
            beta.push(b_next);
            let mut next = std::mem::replace(&mut w, vec![Complex64::new(0.0, 0.0); dim]);
            reduce::scale(Complex64::new(1.0 / b_next, 0.0), &mut next);
            basis.push(next);
        }
        unreachable!("the last Krylov dimension always accepts a step")
    }
}

/// `exp(-iTτ) e_1` for a real symmetric tridiagonal `T`.
///
/// Evaluated by substepped Taylor series rather than an eigenexpansion so that
/// the small trailing components used in the error estimate keep their
/// relative accuracy.
struct TridiagonalExp {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    norm: f64,
}

impl TridiagonalExp {
    fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let m = alpha.len();
        let norm = (0..m)
            .map(|i| {
                let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < m { beta[i].abs() } else { 0.0 };
                alpha[i].abs() + left + right
            })
            .fold(0.0, f64::max);
        Self { alpha: alpha.to_vec(), beta: beta[..m - 1].to_vec(), norm }
    }

    /// `-iτ T x`.
    fn apply(&self, x: &[Complex64], tau: f64) -> Vec<Complex64> {
        let m = x.len();
        let f = Complex64::new(0.0, -tau);
        (0..m)
            .map(|i| {
                let mut acc = x[i] * self.alpha[i];
                if i > 0 {
                    acc += x[i - 1] * self.beta[i - 1];
                }
                if i + 1 < m {
                    acc += x[i + 1] * self.beta[i];
                }
                acc * f
            })
            .collect()
    }

    fn coefficients(&self, tau: f64) -> Vec<Complex64> {
        let m = self.alpha.len();
        let substeps = ((self.norm * tau.abs()) / 0.5).ceil().max(1.0) as usize;
        let h = tau / substeps as f64;
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        y[0] = Complex64::new(1.0, 0.0);
        for _ in 0..substeps {
            let mut term = y.clone();
            let mut sum = y.clone();
            // ‖hT‖ ≤ 1/2, so m + 20 terms resolve every component, including
            // the trailing ones that only appear at order m − 1.
            for k in 1..=(m + TAYLOR_EXTRA_TERMS) {
                term = self.apply(&term, h);
                let inv = 1.0 / k as f64;
                for (s, t) in sum.iter_mut().zip(term.iter_mut()) {
                    *t *= inv;
                    *s += *t;
                }
            }
            y = sum;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, SpinConvention};

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = OperatorSum::new(3, SpinConvention::SpinHalf).unwrap();
        let psi = StateVector::basis(3, 5).unwrap();
        assert_eq!(evolve(&psi, &h, 1.0).unwrap(), psi);
    }

    #[test]
    fn single_spin_precession() {
        let mut h = OperatorSum::new(1, SpinConvention::Pauli).unwrap();
        h.add_spin_product(1.0, &[(0, Pauli::X)]).unwrap();
        let psi = StateVector::basis(1, 0).unwrap();
        for method in [Method::Dense, Method::Krylov] {
            let p = Propagator::new(&h, &EvolveOptions::with_method(method)).unwrap();
            let out = p.evolve(&psi, 0.3).unwrap();
            // exp(-i 0.3 X)|0⟩ = cos 0.3 |0⟩ − i sin 0.3 |1⟩.
            assert!((out.amplitudes()[0] - Complex64::new(0.3f64.cos(), 0.0)).norm() < 1e-12);
            assert!((out.amplitudes()[1] - Complex64::new(0.0, -0.3f64.sin())).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = OperatorSum::new(1, SpinConvention::Pauli).unwrap();
        h.push(crate::PauliString::new(Complex64::new(0.0, 1.0), &[(0, Pauli::Z)]).unwrap()).unwrap();
        assert!(matches!(Propagator::new(&h, &EvolveOptions::default()), Err(Error::NotHermitian(_))));
    }
}
