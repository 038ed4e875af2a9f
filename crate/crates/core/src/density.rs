//! Small dense density matrices and reduced states.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{OperatorSum, HERMITIAN_TOL};
use crate::reduce::{CHUNK, PAR_THRESHOLD};
use crate::state::StateVector;

/// Largest number of sites kept by [`partial_trace`].
pub const MAX_KEPT_SITES: usize = 3;

/// Mixed state of a few sites, `2^m × 2^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and `λ_min ≥ -1e-10`.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let n_sites = Self::sites_for(&data)?;
        let herm = (&data - data.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = data.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}, expected 1")));
        }
        let dm = Self { n_sites, data };
        let min = dm.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(dm)
    }

    pub(crate) fn from_raw(data: DMatrix<Complex64>) -> Self {
        let n_sites = Self::sites_for(&data).expect("power-of-two square matrix");
        Self { n_sites, data }
    }

    fn sites_for(data: &DMatrix<Complex64>) -> Result<usize> {
        let d = data.nrows();
        if d != data.ncols() || d < 2 || !d.is_power_of_two() {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}×{} is not a square power of two",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(d.trailing_zeros() as usize)
    }

    /// `|ψ⟩⟨ψ|` for a small register.
    pub fn from_state(psi: &StateVector) -> Result<Self> {
        if psi.n_sites() > MAX_KEPT_SITES * 2 {
            return Err(Error::TooManyKeptSites { got: psi.n_sites(), max: MAX_KEPT_SITES * 2 });
        }
        let a = psi.amplitudes();
        let d = a.len();
        Ok(Self::from_raw(DMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj())))
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_sites: usize) -> Self {
        let d = 1usize << n_sites;
        Self::from_raw(DMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> =
            SymmetricEigen::new(hermitian_part(&self.data)).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Population of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.data[(index, index)].re
    }

    /// `Tr(ρ·op)` for an operator on the same sites.
    pub fn expectation(&self, op: &OperatorSum) -> Result<f64> {
        if op.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: op.n_sites() });
        }
        op.ensure_hermitian()?;
        Ok((&self.data * op.to_dense()?).trace().re)
    }

    /// Reduced state on `keep` (first entry becomes the lowest bit).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = KeepLayout::new(self.n_sites, keep)?;
        let dk = 1usize << keep.len();
        let mut out = DMatrix::<Complex64>::zeros(dk, dk);
        for rest in layout.rest_indices() {
            for a in 0..dk {
                let ia = rest | layout.scatter(a);
                for b in 0..dk {
                    out[(a, b)] += self.data[(ia, rest | layout.scatter(b))];
                }
            }
        }
        Ok(DensityMatrix::from_raw(out))
    }
}

/// `(M + M†)/2`; removes rounding asymmetry before a Hermitian eigensolve.
pub(crate) fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of a PSD matrix below this fraction of the largest are
/// treated as rounding noise.
pub(crate) const NOISE_EIGENVALUE: f64 = 1e-15;

/// `W = [√p_k v_k]` with `A = W W†`, dropping noise-level eigenvalues.
///
/// Quantities like `‖√A √B‖_tr = ‖W_A† W_B‖_tr` computed from these factors
/// avoid square roots of rounding-level eigenvalues.
pub(crate) fn psd_factor(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let e = SymmetricEigen::new(hermitian_part(a));
    let cutoff = NOISE_EIGENVALUE * e.eigenvalues.max().max(0.0);
    let kept: Vec<usize> = (0..a.nrows()).filter(|&k| e.eigenvalues[k] > cutoff).collect();
    DMatrix::from_fn(a.nrows(), kept.len(), |r, k| e.eigenvectors[(r, kept[k])] * e.eigenvalues[kept[k]].sqrt())
}

/// Bit layout for splitting a basis index into kept and traced parts.
struct KeepLayout {
    n_sites: usize,
    keep: Vec<usize>,
    keep_mask: usize,
}

impl KeepLayout {
    fn new(n_sites: usize, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidParameter("partial trace must keep at least one site".into()));
        }
        if keep.len() > MAX_KEPT_SITES {
            return Err(Error::TooManyKeptSites { got: keep.len(), max: MAX_KEPT_SITES });
        }
        let mut keep_mask = 0usize;
        for &k in keep {
            if k >= n_sites {
                return Err(Error::SiteOutOfRange { site: k, n_sites });
            }
            if keep_mask & (1 << k) != 0 {
                return Err(Error::InvalidParameter(format!("site {k} kept twice")));
            }
            keep_mask |= 1 << k;
        }
        Ok(Self { n_sites, keep: keep.to_vec(), keep_mask })
    }

    #[inline]
    fn scatter(&self, a: usize) -> usize {
        self.keep.iter().enumerate().fold(0, |acc, (bit, &site)| acc | (((a >> bit) & 1) << site))
    }

    /// Indices with every kept bit cleared, in increasing order.
    fn rest_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..1usize << self.n_sites).filter(move |i| i & self.keep_mask == 0)
    }
}

/// Reduced density matrix of a pure state on the sites in `keep`.
///
/// The first kept site becomes bit 0 of the reduced basis index.
pub fn partial_trace(psi: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = KeepLayout::new(psi.n_sites(), keep)?;
    let dk = 1usize << keep.len();
    let amps = psi.amplitudes();
    let rest: Vec<usize> = layout.rest_indices().collect();

    // Fixed blocks over the traced indices, folded in order.
    let block = |chunk: &[usize]| -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); dk * dk];
        let mut v = [Complex64::new(0.0, 0.0); 1 << MAX_KEPT_SITES];
        for &r in chunk {
            for (a, slot) in v.iter_mut().enumerate().take(dk) {
                *slot = amps[r | layout.scatter(a)];
            }
            for a in 0..dk {
                for b in 0..dk {
                    acc[a * dk + b] += v[a] * v[b].conj();
                }
            }
        }
        acc
    };
    let partials: Vec<Vec<Complex64>> = if amps.len() >= PAR_THRESHOLD {
        rest.par_chunks(CHUNK).map(block).collect()
    } else {
        rest.chunks(CHUNK).map(block).collect()
    };
    let mut out = DMatrix::<Complex64>::zeros(dk, dk);
    for p in partials {
        for a in 0..dk {
            for b in 0..dk {
                out[(a, b)] += p[a * dk + b];
            }
        }
    }
    Ok(DensityMatrix::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell =
            StateVector::from_amplitudes(2, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])
                .unwrap();
        let r = partial_trace(&bell, &[0]).unwrap();
        let target = DensityMatrix::maximally_mixed(1);
        assert!((r.matrix() - target.matrix()).norm() < 1e-15);
    }

    #[test]
    fn product_state_reduces_to_projector() {
        // |01⟩ in site order: site 0 in |0⟩, site 1 in |1⟩.
        let psi = StateVector::product(2, |k| k == 1).unwrap();
        let r = partial_trace(&psi, &[0]).unwrap();
        assert_eq!(r.population(0), 1.0);
        assert_eq!(r.population(1), 0.0);
        let r1 = partial_trace(&psi, &[1]).unwrap();
        assert_eq!(r1.population(1), 1.0);
    }

    #[test]
    fn keep_validation() {
        let psi = StateVector::basis(4, 0).unwrap();
        assert!(matches!(partial_trace(&psi, &[]), Err(Error::InvalidParameter(_))));
        assert!(matches!(partial_trace(&psi, &[4]), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(
            partial_trace(&psi, &[0, 1, 2, 3]),
            Err(Error::TooManyKeptSites { .. })
        ));
        assert!(partial_trace(&psi, &[1, 1]).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let not_trace_one = DMatrix::<Complex64>::identity(2, 2);
        assert!(DensityMatrix::new(not_trace_one).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(DensityMatrix::new(negative).is_err());
        let non_herm = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(non_herm).is_err());
        let odd = DMatrix::<Complex64>::identity(3, 3) / c(3.0, 0.0);
        assert!(DensityMatrix::new(odd).is_err());
    }

    #[test]
    fn density_partial_trace_matches_state_partial_trace() {
        let amps: Vec<Complex64> =
            (0..8).map(|i| c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos())).collect();
        let psi = StateVector::normalized(3, amps).unwrap();
        let rho = DensityMatrix::from_state(&psi).unwrap();
        let a = partial_trace(&psi, &[2, 0]).unwrap();
        let b = rho.partial_trace(&[2, 0]).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-14);
    }
}
