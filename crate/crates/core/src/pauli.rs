//! Pauli factors, sparse Pauli strings and the spin-operator convention.

use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest site count representable by the bit masks of a [`PauliString`].
pub const MAX_SITES: usize = 64;

/// Normalization of the site spin operators `S_α`, `I_α`.
///
/// `SpinHalf` uses `S_α = σ_α / 2`, so `exp(-iθ S_α)` rotates the Bloch
/// vector by exactly θ. `Pauli` uses `S_α = σ_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SpinConvention {
    #[default]
    SpinHalf,
    Pauli,
}

impl SpinConvention {
    /// Factor multiplying each single-site Pauli matrix.
    pub fn scale(self) -> f64 {
        match self {
            SpinConvention::SpinHalf => 0.5,
            SpinConvention::Pauli => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpinConvention::SpinHalf => "spin-half",
            SpinConvention::Pauli => "pauli",
        }
    }

    pub(crate) fn ensure_same(self, other: SpinConvention) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ConventionMismatch(self.name(), other.name()))
        }
    }
}

impl fmt::Display for SpinConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Single-site Pauli matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        match self {
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Pauli {
        Pauli::ALL[i]
    }

    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A coefficient times a tensor product of single-site Pauli matrices.
///
/// Factors are stored as bit masks: site `k` carries X if only bit `k` of
/// `x_mask` is set, Z if only bit `k` of `z_mask` is set and Y if both are.
/// Absent sites are the identity. On a computational basis state,
/// `P|b⟩ = coeff · i^{n_Y} · (-1)^{popcount(b & z_mask)} |b ^ x_mask⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliString {
    coeff: Complex64,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    /// Builds a string from `(site, factor)` pairs. Each site may appear once.
    pub fn new(coeff: Complex64, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut x_mask = 0u64;
        let mut z_mask = 0u64;
        for &(site, p) in factors {
            if site >= MAX_SITES {
                return Err(Error::SiteOutOfRange { site, n_sites: MAX_SITES });
            }
            let bit = 1u64 << site;
            if (x_mask | z_mask) & bit != 0 {
                return Err(Error::InvalidParameter(format!(
                    "site {site} appears twice in a Pauli string"
                )));
            }
            let (x, z) = p.bits();
            if x {
                x_mask |= bit;
            }
            if z {
                z_mask |= bit;
            }
        }
        Ok(Self { coeff, x_mask, z_mask })
    }

    pub fn real(coeff: f64, factors: &[(usize, Pauli)]) -> Result<Self> {
        Self::new(Complex64::new(coeff, 0.0), factors)
    }

    pub fn identity(coeff: Complex64) -> Self {
        Self { coeff, x_mask: 0, z_mask: 0 }
    }

    pub fn coeff(&self) -> Complex64 {
        self.coeff
    }

    pub fn with_coeff(self, coeff: Complex64) -> Self {
        Self { coeff, ..self }
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Support as a bit mask.
    pub fn support(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    /// Whether two strings have the same Pauli factors (coefficients ignored).
    pub fn same_factors(&self, other: &PauliString) -> bool {
        self.x_mask == other.x_mask && self.z_mask == other.z_mask
    }

    pub fn factor(&self, site: usize) -> Option<Pauli> {
        if site >= MAX_SITES {
            return None;
        }
        let bit = 1u64 << site;
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
            (false, false) => None,
        }
    }

    /// Non-identity factors in increasing site order.
    pub fn factors(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        let support = self.support();
        (0..MAX_SITES)
            .filter(move |&k| support & (1u64 << k) != 0)
            .map(move |k| (k, self.factor(k).expect("site in support")))
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    /// Highest site index touched, if any.
    pub fn max_site(&self) -> Option<usize> {
        let s = self.support();
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    /// `coeff · i^{n_Y}`: the amplitude factor applied when acting on basis states.
    pub(crate) fn phase_coeff(&self) -> Complex64 {
        let ny = (self.x_mask & self.z_mask).count_ones() % 4;
        let ipow = match ny {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        self.coeff * ipow
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.6e}{:+.6e}i)", self.coeff.re, self.coeff.im)?;
        if self.support() == 0 {
            return write!(f, " I");
        }
        for (k, p) in self.factors() {
            write!(f, " {p}{k}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_roundtrip() {
        let p = PauliString::real(2.0, &[(0, Pauli::X), (3, Pauli::Y), (5, Pauli::Z)]).unwrap();
        assert_eq!(p.factor(0), Some(Pauli::X));
        assert_eq!(p.factor(3), Some(Pauli::Y));
        assert_eq!(p.factor(5), Some(Pauli::Z));
        assert_eq!(p.factor(1), None);
        assert_eq!(p.weight(), 3);
        assert_eq!(p.max_site(), Some(5));
        let f: Vec<_> = p.factors().collect();
        assert_eq!(f, vec![(0, Pauli::X), (3, Pauli::Y), (5, Pauli::Z)]);
    }

    #[test]
    fn duplicate_site_rejected() {
        assert!(PauliString::real(1.0, &[(2, Pauli::X), (2, Pauli::Z)]).is_err());
        assert!(PauliString::real(1.0, &[(64, Pauli::X)]).is_err());
    }

    #[test]
    fn y_phase() {
        let y = PauliString::real(1.0, &[(0, Pauli::Y)]).unwrap();
        assert_eq!(y.phase_coeff(), Complex64::new(0.0, 1.0));
        let yy = PauliString::real(1.0, &[(0, Pauli::Y), (1, Pauli::Y)]).unwrap();
        assert_eq!(yy.phase_coeff(), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn convention_scale() {
        assert_eq!(SpinConvention::default(), SpinConvention::SpinHalf);
        assert_eq!(SpinConvention::SpinHalf.scale(), 0.5);
        assert_eq!(SpinConvention::Pauli.scale(), 1.0);
        assert!(SpinConvention::Pauli.ensure_same(SpinConvention::SpinHalf).is_err());
    }
}
