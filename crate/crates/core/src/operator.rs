//! Weighted sums of Pauli strings and their matrix-free action on states.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, SpinConvention, MAX_SITES};
use crate::reduce::{self, CHUNK, PAR_THRESHOLD};
use crate::state::StateVector;

/// Largest site count for which [`OperatorSum::to_dense`] builds a matrix.
pub const DENSE_MAX_SITES: usize = 14;

/// Tolerance for Hermiticity and trace checks.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Hamiltonian or observable: a list of [`PauliString`] terms on `n_sites` sites.
///
/// Coefficients multiply bare Pauli matrices. The spin convention records how
/// the operator was assembled from `S_α` products and is checked whenever two
/// operators are combined.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSum {
    n_sites: usize,
    convention: SpinConvention,
    terms: Vec<PauliString>,
}

impl OperatorSum {
    pub fn new(n_sites: usize, convention: SpinConvention) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::InvalidParameter(format!(
                "operators need 1..={MAX_SITES} sites, got {n_sites}"
            )));
        }
        Ok(Self { n_sites, convention, terms: Vec::new() })
    }

    pub fn from_terms(
        n_sites: usize,
        convention: SpinConvention,
        terms: impl IntoIterator<Item = PauliString>,
    ) -> Result<Self> {
        let mut op = Self::new(n_sites, convention)?;
        for t in terms {
            op.push(t)?;
        }
        Ok(op)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn convention(&self) -> SpinConvention {
        self.convention
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PauliString) -> Result<()> {
        if let Some(site) = term.max_site() {
            if site >= self.n_sites {
                return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites });
            }
        }
        self.terms.push(term);
        Ok(())
    }

    /// Adds `coeff · Π S_α(site)` with the operator's spin convention, i.e.
    /// `coeff · scale^k · Π σ_α(site)` for a `k`-site product.
    pub fn add_spin_product(&mut self, coeff: f64, factors: &[(usize, Pauli)]) -> Result<()> {
        let scale = self.convention.scale().powi(factors.len() as i32);
        self.push(PauliString::real(coeff * scale, factors)?)
    }

    /// Sum of two operators on the same register and convention.
    pub fn add(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.terms.extend_from_slice(&other.terms);
        Ok(out)
    }

    pub fn scaled(&self, factor: Complex64) -> OperatorSum {
        let mut out = self.clone();
        for t in &mut out.terms {
            *t = t.with_coeff(t.coeff() * factor);
        }
        out
    }

    pub(crate) fn check_compatible(&self, other: &OperatorSum) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: other.n_sites });
        }
        self.convention.ensure_same(other.convention)
    }

    /// Merges terms with identical factors (first-appearance order) and drops
    /// terms whose coefficient is below `1e-14` of the largest one.
    pub fn simplify(&self) -> OperatorSum {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut merged: Vec<PauliString> = Vec::new();
        for t in &self.terms {
            match index.get(&(t.x_mask(), t.z_mask())) {
                Some(&i) => merged[i] = merged[i].with_coeff(merged[i].coeff() + t.coeff()),
                None => {
                    index.insert((t.x_mask(), t.z_mask()), merged.len());
                    merged.push(*t);
                }
            }
        }
        let largest = merged.iter().map(|t| t.coeff().norm()).fold(0.0, f64::max);
        let cutoff = 1e-14 * largest;
        merged.retain(|t| t.coeff().norm() > cutoff);
        OperatorSum { n_sites: self.n_sites, convention: self.convention, terms: merged }
    }

    /// Coefficient of the given factors after merging duplicates (zero if absent).
    pub fn coefficient_of(&self, factors: &[(usize, Pauli)]) -> Result<Complex64> {
        let probe = PauliString::real(1.0, factors)?;
        Ok(self
            .terms
            .iter()
            .filter(|t| t.same_factors(&probe))
            .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t.coeff()))
    }

    /// Largest `|Im c|` among merged coefficients. Distinct Pauli strings are
    /// linearly independent and Hermitian, so the sum is Hermitian iff this is zero.
    pub fn hermiticity_residual(&self) -> f64 {
        self.simplify().terms.iter().map(|t| t.coeff().im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        let s = self.simplify();
        let scale = s.coefficient_norm().max(1.0);
        s.terms.iter().all(|t| t.coeff().im.abs() <= HERMITIAN_TOL * scale)
    }

    pub(crate) fn ensure_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian(self.hermiticity_residual()))
        }
    }

    /// Whether the operator commutes with `Σ_k σ_z^{(k)}`, checked symbolically
    /// through `Σ_k [P, Z_k]` (`[X,Z] = -2iY`, `[Y,Z] = 2iX`).
    pub fn conserves_total_z(&self) -> bool {
        let mut comm: HashMap<(u64, u64), Complex64> = HashMap::new();
        for t in &self.terms {
            for k in 0..self.n_sites {
                let bit = 1u64 << k;
                if t.x_mask() & bit == 0 {
                    continue;
                }
                let (z, factor) = if t.z_mask() & bit == 0 {
                    (t.z_mask() | bit, Complex64::new(0.0, -2.0))
                } else {
                    (t.z_mask() & !bit, Complex64::new(0.0, 2.0))
                };
                *comm.entry((t.x_mask(), z)).or_default() += t.coeff() * factor;
            }
        }
        let tol = HERMITIAN_TOL * self.coefficient_norm().max(1.0);
        comm.values().all(|c| c.norm() <= tol)
    }

    /// `Σ |c_t|`, an upper bound on the spectral norm.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff().norm()).sum()
    }

    /// Dense `2^n × 2^n` matrix. Intended for small systems and oracles.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.n_sites > DENSE_MAX_SITES {
            return Err(Error::DenseLimit { n_sites: self.n_sites, max: DENSE_MAX_SITES });
        }
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            let pc = t.phase_coeff();
            for col in 0..dim {
                let row = col ^ t.x_mask() as usize;
                let sign = if (col as u64 & t.z_mask()).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                m[(row, col)] += pc * sign;
            }
        }
        Ok(m)
    }

    /// Precomputes the grouped kernel used for repeated application.
    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator::new(self)
    }

    /// `op · ψ`, matrix-free.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        apply_operator(self, psi)
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OperatorSum[{} sites, {}]", self.n_sites, self.convention)?;
        for t in &self.terms {
            writeln!(f, "  {t}")?;
        }
        Ok(())
    }
}

/// Terms grouped by X mask so that each output amplitude gathers from one
/// source index per group.
#[derive(Debug, Clone)]
pub struct CompiledOperator {
    n_sites: usize,
    /// `(x_mask, [(z_mask, coeff · i^{n_Y})])`.
    groups: Vec<(usize, Vec<(usize, Complex64)>)>,
    norm_bound: f64,
}

impl CompiledOperator {
    fn new(op: &OperatorSum) -> Self {
        let simplified = op.simplify();
        let mut order: Vec<usize> = Vec::new();
        let mut groups: HashMap<usize, Vec<(usize, Complex64)>> = HashMap::new();
        for t in simplified.terms() {
            let x = t.x_mask() as usize;
            groups
                .entry(x)
                .or_insert_with(|| {
                    order.push(x);
                    Vec::new()
                })
                .push((t.z_mask() as usize, t.phase_coeff()));
        }
        let groups = order.into_iter().map(|x| (x, groups.remove(&x).unwrap())).collect();
        Self { n_sites: op.n_sites(), groups, norm_bound: simplified.coefficient_norm() }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Upper bound on the spectral norm (sum of coefficient magnitudes).
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    #[inline]
    fn gather(&self, j: usize, input: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, terms) in &self.groups {
            let src = j ^ x;
            let mut f = Complex64::new(0.0, 0.0);
            for &(z, c) in terms {
                if (src & z).count_ones() & 1 == 1 {
                    f -= c;
                } else {
                    f += c;
                }
            }
            acc += f * input[src];
        }
        acc
    }

    /// `out ← op · input`. Each output element is computed independently with
    /// a fixed term order, so the result does not depend on the thread count.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(input.len(), out.len());
        if out.len() >= PAR_THRESHOLD {
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, block)| {
                let base = c * CHUNK;
                for (k, o) in block.iter_mut().enumerate() {
                    *o = self.gather(base + k, input);
                }
            });
        } else {
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.gather(j, input);
            }
        }
    }

    /// Nonzero candidates of row `j`: `(column, value)` per X-mask group.
    pub(crate) fn row(&self, j: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.groups.iter().map(move |(x, terms)| {
            let src = j ^ x;
            let v = terms.iter().fold(Complex64::new(0.0, 0.0), |acc, &(z, c)| {
                if (src & z).count_ones() & 1 == 1 {
                    acc - c
                } else {
                    acc + c
                }
            });
            (src, v)
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: psi.n_sites() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(StateVector::from_raw(self.n_sites, out))
    }
}

/// `op · ψ` without materializing the matrix.
pub fn apply_operator(op: &OperatorSum, psi: &StateVector) -> Result<StateVector> {
    if op.n_sites() != psi.n_sites() {
        return Err(Error::DimensionMismatch { expected: op.n_sites(), got: psi.n_sites() });
    }
    op.compile().apply(psi)
}

/// `⟨ψ|op|ψ⟩` for a Hermitian operator.
pub fn expectation(psi: &StateVector, op: &OperatorSum) -> Result<f64> {
    op.ensure_hermitian()?;
    let applied = apply_operator(op, psi)?;
    let value = reduce::inner(psi.amplitudes(), applied.amplitudes());
    let tol = HERMITIAN_TOL * op.coefficient_norm().max(1.0);
    if value.im.abs() > tol {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}
