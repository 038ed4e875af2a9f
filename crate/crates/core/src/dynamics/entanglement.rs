//! Two-qubit concurrence and entanglement of formation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{psd_factor, DensityMatrix};
use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Most negative eigenvalue tolerated in an input state.
pub const PHYSICAL_TOL: f64 = 1e-8;

/// `σ_y ⊗ σ_y` in the two-site basis.
fn yy() -> DMatrix<Complex64> {
    let y = Pauli::Y.matrix();
    DMatrix::from_fn(4, 4, |r, c| y[(r >> 1, c >> 1)] * y[(r & 1, c & 1)])
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.n_sites() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: rho.n_sites() });
    }
    let min = rho.eigenvalues()[0];
    if min < -PHYSICAL_TOL {
        return Err(Error::NonPhysical(format!("negative eigenvalue {min:e}")));
    }
    // λ_i are the singular values of τ = Wᵀ(σ_y⊗σ_y)W with W = [√p_k v_k];
    // this avoids square roots of eigenvalues that are pure rounding noise.
    let w = psd_factor(rho.matrix());
    if w.ncols() == 0 {
        return Ok(0.0);
    }
    let tau = w.transpose() * yy() * &w;
    let mut lambda: Vec<f64> = tau.singular_values().iter().copied().collect();
    lambda.resize(4, 0.0);
    lambda.sort_by(|a, b| b.total_cmp(a));
    let c = lambda[0] - lambda[1] - lambda[2] - lambda[3];
    Ok(c.clamp(0.0, 1.0))
}

/// `-x log₂ x - (1-x) log₂(1-x)`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Entanglement of formation from a concurrence value.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt())).clamp(0.0, 1.0)
}

pub fn eof(rho: &DensityMatrix) -> Result<f64> {
    concurrence(rho).map(eof_from_concurrence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eof_endpoints() {
        assert_eq!(eof_from_concurrence(0.0), 0.0);
        assert!((eof_from_concurrence(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_is_separable() {
        assert_eq!(concurrence(&DensityMatrix::maximally_mixed(2)).unwrap(), 0.0);
        assert!(concurrence(&DensityMatrix::maximally_mixed(1)).is_err());
    }
}
