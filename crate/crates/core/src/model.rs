//! The carbon–hydrogen two-chain model and its Hamiltonians.
//!
//! Site 0 is the carbon (the working qubit). Chain `a` occupies sites
//! `1..=N` and chain `b` sites `N+1..=2N`, nearest-to-carbon first.
//! Couplings are angular frequencies in rad/s; Hamiltonians used for
//! dynamics are expressed as `H/ħ`.

use crate::error::{Error, Result};
use crate::operator::OperatorSum;
use crate::pauli::{Pauli, SpinConvention};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// ¹³C Larmor frequency at 11.7 T, rad/s.
pub const DEFAULT_OMEGA1: f64 = 2.0 * std::f64::consts::PI * 125.7e6;

pub const CARBON: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chain {
    A,
    B,
}

impl Chain {
    pub const BOTH: [Chain; 2] = [Chain::A, Chain::B];
}

/// Carbon coupled to the first hydrogen of two linear chains of `N` hydrogens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainTopology {
    n_per_chain: usize,
}

impl ChainTopology {
    pub fn new(n_per_chain: usize) -> Result<Self> {
        if n_per_chain == 0 {
            return Err(Error::InvalidParameter("each chain needs at least one hydrogen".into()));
        }
        if 1 + 2 * n_per_chain > crate::state::MAX_STATE_SITES {
            return Err(Error::InvalidParameter(format!(
                "{n_per_chain} hydrogens per chain exceeds the state-vector limit"
            )));
        }
        Ok(Self { n_per_chain })
    }

    /// Topology with `total` hydrogens split evenly over the two chains.
    pub fn with_total_hydrogens(total: usize) -> Result<Self> {
        if !total.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "total hydrogen count {total} must be even (two symmetric chains)"
            )));
        }
        Self::new(total / 2)
    }

    pub fn n_per_chain(&self) -> usize {
        self.n_per_chain
    }

    pub fn n_hydrogens(&self) -> usize {
        2 * self.n_per_chain
    }

    pub fn n_sites(&self) -> usize {
        1 + 2 * self.n_per_chain
    }

    /// Site of the `k`-th hydrogen (1-based) of a chain.
    pub fn hydrogen(&self, chain: Chain, k: usize) -> Result<usize> {
        if k == 0 || k > self.n_per_chain {
            return Err(Error::InvalidParameter(format!(
                "hydrogen index {k} outside 1..={}",
                self.n_per_chain
            )));
        }
        Ok(match chain {
            Chain::A => k,
            Chain::B => self.n_per_chain + k,
        })
    }

    pub fn first_hydrogen(&self, chain: Chain) -> usize {
        self.hydrogen(chain, 1).expect("chains are nonempty")
    }

    /// Hydrogen–hydrogen bonds `(k, k+1)` of both chains.
    pub fn hydrogen_bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds = Vec::with_capacity(2 * (self.n_per_chain - 1));
        for chain in Chain::BOTH {
            for k in 1..self.n_per_chain {
                let a = self.hydrogen(chain, k).unwrap();
                bonds.push((a, a + 1));
            }
        }
        bonds
    }
}

/// Natural dipolar couplings (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstants {
    pub j_ch: f64,
    pub j_hh: f64,
}

impl CouplingConstants {
    pub fn new(j_ch: f64, j_hh: f64) -> Result<Self> {
        if !j_ch.is_finite() || !j_hh.is_finite() {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        Ok(Self { j_ch, j_hh })
    }

    /// Natural couplings producing the given engineered ones (`J = 4 J_eff`).
    pub fn from_effective(j_ch_eff: f64, j_hh_eff: f64) -> Result<Self> {
        Self::new(4.0 * j_ch_eff, 4.0 * j_hh_eff)
    }

    pub fn j_ch_eff(&self) -> f64 {
        self.j_ch / 4.0
    }

    pub fn j_hh_eff(&self) -> f64 {
        self.j_hh / 4.0
    }
}

/// Working-qubit Zeeman parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanParams {
    pub omega1: f64,
    pub hbar: f64,
}

impl ZeemanParams {
    pub fn new(omega1: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega1.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega1 must be positive, got {omega1}")));
        }
        Ok(Self { omega1, hbar: HBAR })
    }

    /// Parameters in units where `ħ = 1`.
    pub fn natural_units(omega1: f64) -> Result<Self> {
        Ok(Self { hbar: 1.0, ..Self::new(omega1)? })
    }

    /// `ħω₁`.
    pub fn quantum(&self) -> f64 {
        self.hbar * self.omega1
    }
}

impl Default for ZeemanParams {
    fn default() -> Self {
        Self { omega1: DEFAULT_OMEGA1, hbar: HBAR }
    }
}

/// Natural Hamiltonian `H_SE + H_E` in the rotating frame:
/// `J_ch Σ_α S_z I_z^{α,1} + J_hh Σ_α Σ_k [2 I_z I_z − (I_x I_x + I_y I_y)]`.
pub fn build_natural_hamiltonian(
    topo: &ChainTopology,
    c: &CouplingConstants,
    convention: SpinConvention,
) -> Result<OperatorSum> {
    let mut h = OperatorSum::new(topo.n_sites(), convention)?;
    for chain in Chain::BOTH {
        let h1 = topo.first_hydrogen(chain);
        h.add_spin_product(c.j_ch, &[(CARBON, Pauli::Z), (h1, Pauli::Z)])?;
    }
    add_hydrogen_bonds(&mut h, topo, c.j_hh)?;
    Ok(h)
}

/// Engineered Hamiltonian produced by the four-pulse cycle:
/// `(J_ch/4) Σ_α (2 S_z I_z + S_x I_x + S_y I_y) + (J_hh/4) Σ_α Σ_k [2 I_z I_z − I_x I_x − I_y I_y]`.
pub fn build_effective_hamiltonian(
    topo: &ChainTopology,
    c: &CouplingConstants,
    convention: SpinConvention,
) -> Result<OperatorSum> {
    let mut h = OperatorSum::new(topo.n_sites(), convention)?;
    let j = c.j_ch_eff();
    for chain in Chain::BOTH {
        let h1 = topo.first_hydrogen(chain);
        h.add_spin_product(2.0 * j, &[(CARBON, Pauli::Z), (h1, Pauli::Z)])?;
        h.add_spin_product(j, &[(CARBON, Pauli::X), (h1, Pauli::X)])?;
        h.add_spin_product(j, &[(CARBON, Pauli::Y), (h1, Pauli::Y)])?;
    }
    add_hydrogen_bonds(&mut h, topo, c.j_hh_eff())?;
    Ok(h)
}

fn add_hydrogen_bonds(h: &mut OperatorSum, topo: &ChainTopology, j_hh: f64) -> Result<()> {
    for (a, b) in topo.hydrogen_bonds() {
        h.add_spin_product(2.0 * j_hh, &[(a, Pauli::Z), (b, Pauli::Z)])?;
        h.add_spin_product(-j_hh, &[(a, Pauli::X), (b, Pauli::X)])?;
        h.add_spin_product(-j_hh, &[(a, Pauli::Y), (b, Pauli::Y)])?;
    }
    Ok(())
}

/// Single-site Zeeman Hamiltonian `H₁ = −½ ħω₁ S_z` (joules).
pub fn build_zeeman(z: &ZeemanParams, convention: SpinConvention) -> Result<OperatorSum> {
    if z.omega1.is_nan() || z.omega1 <= 0.0 {
        return Err(Error::InvalidParameter("omega1 must be positive".into()));
    }
    let mut h = OperatorSum::new(1, convention)?;
    h.add_spin_product(-0.5 * z.quantum(), &[(CARBON, Pauli::Z)])?;
    Ok(h)
}

/// Topology, couplings and convention bundled for the simulation drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainModel {
    pub topology: ChainTopology,
    pub couplings: CouplingConstants,
    pub convention: SpinConvention,
}

impl ChainModel {
    pub fn new(topology: ChainTopology, couplings: CouplingConstants, convention: SpinConvention) -> Self {
        Self { topology, couplings, convention }
    }

    pub fn n_sites(&self) -> usize {
        self.topology.n_sites()
    }

    pub fn natural_hamiltonian(&self) -> Result<OperatorSum> {
        build_natural_hamiltonian(&self.topology, &self.couplings, self.convention)
    }

    pub fn effective_hamiltonian(&self) -> Result<OperatorSum> {
        build_effective_hamiltonian(&self.topology, &self.couplings, self.convention)
    }
}
