//! Pure states over `2^n` computational basis amplitudes.
//!
//! Bit `k` of a basis index is the state of site `k`; `|0⟩` is the
//! `σ_z = +1` eigenstate.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reduce::{self, CHUNK, PAR_THRESHOLD};

/// Tolerance on `‖ψ‖ = 1`.
pub const NORM_TOL: f64 = 1e-10;

/// Largest register the state-vector routines will allocate.
pub const MAX_STATE_SITES: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    fn check_sites(n_sites: usize) -> Result<()> {
        if n_sites == 0 || n_sites > MAX_STATE_SITES {
            return Err(Error::InvalidParameter(format!(
                "state vectors need 1..={MAX_STATE_SITES} sites, got {n_sites}"
            )));
        }
        Ok(())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        Self::check_sites(n_sites)?;
        let dim = 1usize << n_sites;
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for {n_sites} sites"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_sites, amps })
    }

    /// Product state with site `k` excited (`|1⟩`) iff `excited(k)`.
    pub fn product(n_sites: usize, excited: impl Fn(usize) -> bool) -> Result<Self> {
        let index = (0..n_sites).filter(|&k| excited(k)).fold(0usize, |acc, k| acc | (1 << k));
        Self::basis(n_sites, index)
    }

    /// Wraps raw amplitudes. The vector must have length `2^n_sites` and unit norm.
    pub fn from_amplitudes(n_sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        Self::check_sites(n_sites)?;
        if amps.len() != 1usize << n_sites {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes for {n_sites} sites, got {}",
                1usize << n_sites,
                amps.len()
            )));
        }
        let s = Self { n_sites, amps };
        let dev = (s.norm() - 1.0).abs();
        if dev > NORM_TOL {
            return Err(Error::NonPhysical(format!("state norm deviates from 1 by {dev:e}")));
        }
        Ok(s)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(n_sites: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        let n = reduce::norm_sqr(&amps).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NonPhysical("cannot normalize a zero or non-finite vector".into()));
        }
        reduce::scale(Complex64::new(1.0 / n, 0.0), &mut amps);
        Self::from_amplitudes(n_sites, amps)
    }

    /// Unchecked constructor for kernels that produce amplitudes of any norm.
    pub(crate) fn from_raw(n_sites: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << n_sites);
        Self { n_sites, amps }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        reduce::norm_sqr(&self.amps).sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_sites != other.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: other.n_sites });
        }
        Ok(reduce::inner(&self.amps, &other.amps))
    }

    /// Applies a 2×2 matrix to one site in place.
    pub fn apply_single_site(&mut self, site: usize, u: &Matrix2<Complex64>) -> Result<()> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites });
        }
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        let stride = 1usize << site;
        // Blocks of 2·stride amplitudes are independent: low half has bit `site` clear.
        let kernel = |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = u00 * x + u01 * y;
                *b = u10 * x + u11 * y;
            }
        };
        let block = 2 * stride;
        if self.amps.len() >= PAR_THRESHOLD {
            let per_task = block.max(CHUNK);
            self.amps.par_chunks_mut(per_task).for_each(|c| c.chunks_mut(block).for_each(kernel));
        } else {
            self.amps.chunks_mut(block).for_each(kernel);
        }
        Ok(())
    }

    /// `⟨σ_z⟩` of one site.
    pub fn sigma_z(&self, site: usize) -> Result<f64> {
        if site >= self.n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites: self.n_sites });
        }
        let bit = 1usize << site;
        let a = &self.amps;
        Ok(reduce::sum_indexed(a.len(), |i| {
            let p = a[i].norm_sqr();
            if i & bit == 0 {
                p
            } else {
                -p
            }
        }))
    }

    /// Flips every site (`X^{⊗n}`), i.e. reverses the basis ordering.
    pub fn flipped(&self) -> StateVector {
        let mask = self.amps.len() - 1;
        let amps = (0..self.amps.len()).map(|i| self.amps[i ^ mask]).collect();
        StateVector::from_raw(self.n_sites, amps)
    }

    /// Largest elementwise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_bits() {
        let s = StateVector::product(3, |k| k == 0 || k == 2).unwrap();
        assert_eq!(s.amplitudes()[0b101], c(1.0, 0.0));
        assert_eq!(s.sigma_z(0).unwrap(), -1.0);
        assert_eq!(s.sigma_z(1).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(StateVector::basis(2, 4).is_err());
        assert!(StateVector::from_amplitudes(1, vec![c(1.0, 0.0)]).is_err());
        assert!(StateVector::from_amplitudes(1, vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(StateVector::normalized(1, vec![c(0.0, 0.0); 2]).is_err());
        assert!(StateVector::basis(0, 0).is_err());
    }

    #[test]
    fn single_site_gate_flips_target_bit() {
        let x = crate::Pauli::X.matrix();
        let mut s = StateVector::basis(3, 0).unwrap();
        s.apply_single_site(1, &x).unwrap();
        assert_eq!(s.amplitudes()[0b010], c(1.0, 0.0));
        assert!(s.apply_single_site(3, &x).is_err());
    }

    #[test]
    fn flip_reverses_basis() {
        let s = StateVector::basis(3, 0b001).unwrap().flipped();
        assert_eq!(s.amplitudes()[0b110], c(1.0, 0.0));
    }
}
