//! Signed-temperature Gibbs states and the two-stroke single-reservoir machine.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::density::{hermitian_part, partial_trace, DensityMatrix};
use crate::error::{Error, Result};
use crate::model::{build_zeeman, ChainModel, ZeemanParams, CARBON};
use crate::operator::OperatorSum;
use crate::pauli::{Pauli, SpinConvention};
use crate::propagate::EvolveOptions;
use crate::pulse::{rotation, CyclePropagator, PulseCycle};
use crate::state::StateVector;

/// Unitarity tolerance `‖U†U − 𝕀‖`.
pub const UNITARY_TOL: f64 = 1e-10;

/// Largest register accepted by [`thermal_state`].
const THERMAL_MAX_SITES: usize = 3;

/// `β = 1/k_BT` in 1/J; negative for population inversion, zero for infinite temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
        }
        Ok(Self(beta))
    }

    pub fn beta(self) -> f64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0.0
    }
}

/// `e^{-βH}/Z` for a Hamiltonian on at most three sites (energies in joules).
pub fn thermal_state(h: &OperatorSum, beta: InverseTemperature) -> Result<DensityMatrix> {
    if h.n_sites() > THERMAL_MAX_SITES {
        return Err(Error::TooManyKeptSites { got: h.n_sites(), max: THERMAL_MAX_SITES });
    }
    h.ensure_hermitian()?;
    let e = SymmetricEigen::new(hermitian_part(&h.to_dense()?));
    let b = beta.beta();
    // Shift exponents by their maximum so that large |β E| cannot overflow.
    let expo: Vec<f64> = e.eigenvalues.iter().map(|&x| -b * x).collect();
    let top = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = expo.iter().map(|x| (x - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        w.len(),
        w.iter().map(|x| Complex64::new(x / z, 0.0)),
    ));
    let rho = &e.eigenvectors * d * e.eigenvectors.adjoint();
    Ok(DensityMatrix::from_raw(hermitian_part(&rho)))
}

fn unitarity_residual(u: &Matrix2<Complex64>) -> f64 {
    (u.adjoint() * u - Matrix2::identity()).norm()
}

/// `ξ = |⟨1|U|0⟩|²`.
pub fn transition_probability(u: &Matrix2<Complex64>) -> Result<f64> {
    let r = unitarity_residual(u);
    if r > UNITARY_TOL {
        return Err(Error::NonUnitary(r));
    }
    Ok(u[(1, 0)].norm_sqr().clamp(0.0, 1.0))
}

/// The unitary strokes of the machine, with spin-half generators `S = σ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineUnitary {
    /// `exp(-i π/2 S_x)`.
    Ux,
    /// `exp(-i π/2 S_y)`.
    Uy,
    /// `exp(-i π S_x)`.
    Upi,
    /// `exp(-2iπ S_y)`, equal to `-𝕀`.
    UI,
}

impl MachineUnitary {
    pub const ALL: [MachineUnitary; 4] =
        [MachineUnitary::Ux, MachineUnitary::Uy, MachineUnitary::Upi, MachineUnitary::UI];

    pub fn matrix(self) -> Matrix2<Complex64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        let (axis, theta) = match self {
            MachineUnitary::Ux => (Pauli::X, FRAC_PI_2),
            MachineUnitary::Uy => (Pauli::Y, FRAC_PI_2),
            MachineUnitary::Upi => (Pauli::X, PI),
            MachineUnitary::UI => (Pauli::Y, 2.0 * PI),
        };
        rotation(axis, theta, SpinConvention::SpinHalf)
    }

    pub fn name(self) -> &'static str {
        match self {
            MachineUnitary::Ux => "Ux",
            MachineUnitary::Uy => "Uy",
            MachineUnitary::Upi => "Upi",
            MachineUnitary::UI => "UI",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|u| u.name().eq_ignore_ascii_case(name))
    }
}

/// Energy ledger of one machine cycle (joules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineRecord {
    pub xi: f64,
    /// `Tr[ρ₂H₁] − Tr[ρ₁H₁]`; negative when work is extracted.
    pub work: f64,
    /// Energy taken from the bath while returning to `ρ₁`.
    pub heat: f64,
    /// `|W/Q|`, undefined when no heat flows.
    pub efficiency: Option<f64>,
}

impl MachineRecord {
    /// `η` is left undefined when the unitary does not flip the qubit or no
    /// heat flows, so that `0/0` never reads as a valid efficiency.
    fn new(xi: f64, work: f64, heat: f64, energy_unit: f64) -> Self {
        let defined = xi > 1e-12 && heat.abs() > 1e-12 * energy_unit;
        let efficiency = defined.then(|| (work / heat).abs());
        Self { xi, work, heat, efficiency }
    }
}

fn energy(rho: &DMatrix<Complex64>, h: &DMatrix<Complex64>) -> f64 {
    (rho * h).trace().re
}

/// Spectral gap of a single-site Hamiltonian.
fn gap(h: &DMatrix<Complex64>) -> f64 {
    let ev = SymmetricEigen::new(hermitian_part(h)).eigenvalues;
    ev.max() - ev.min()
}

/// Work and heat of `ρ₁ → Uρ₁U† → ρ₁` for a Gibbs state `ρ₁` of `h1`.
pub fn work_and_heat(rho1: &DensityMatrix, u: &Matrix2<Complex64>, h1: &OperatorSum) -> Result<MachineRecord> {
    if rho1.n_sites() != 1 || h1.n_sites() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: rho1.n_sites().max(h1.n_sites()) });
    }
    h1.ensure_hermitian()?;
    let xi = transition_probability(u)?;
    let h = h1.to_dense()?;
    let r1 = rho1.matrix();
    let unit = gap(&h).max(f64::MIN_POSITIVE);
    let comm = (r1 * &h - &h * r1).norm() / unit;
    if comm > 1e-8 {
        return Err(Error::InvalidDensityMatrix(format!(
            "initial state does not commute with H1 (residual {comm:e})"
        )));
    }
    let um = DMatrix::from_fn(2, 2, |i, j| u[(i, j)]);
    let r2 = &um * r1 * um.adjoint();
    let work = energy(&r2, &h) - energy(r1, &h);
    Ok(MachineRecord::new(xi, work, -work, unit))
}

/// `⟨W⟩ = Δ ξ tanh(βΔ/2)` for a two-level Gibbs state with gap `Δ`;
/// at negative β this is `−Δ ξ tanh(|β|Δ/2)`.
pub fn closed_form_work(beta: InverseTemperature, gap: f64, xi: f64) -> f64 {
    gap * xi * (0.5 * beta.beta() * gap).tanh()
}

/// Excited-state population of the carbon before and after each stroke of
/// the ideal cycle `ρ_ground → ρ₁ → ρ₂ → ρ₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokePopulations {
    pub ground: f64,
    pub thermal: f64,
    pub after_unitary: f64,
    pub rethermalized: f64,
}

/// Closed-form machine cycle.
pub fn run_machine_analytic(
    beta: InverseTemperature,
    zeeman: &ZeemanParams,
    unitary: MachineUnitary,
    convention: SpinConvention,
) -> Result<(MachineRecord, StrokePopulations)> {
    let h1 = build_zeeman(zeeman, convention)?;
    let rho1 = thermal_state(&h1, beta)?;
    let u = unitary.matrix();
    let record = work_and_heat(&rho1, &u, &h1)?;
    let um = DMatrix::from_fn(2, 2, |i, j| u[(i, j)]);
    let rho2 = &um * rho1.matrix() * um.adjoint();
    let pops = StrokePopulations {
        ground: 0.0,
        thermal: rho1.population(1),
        after_unitary: rho2[(1, 1)].re,
        rethermalized: rho1.population(1),
    };
    Ok((record, pops))
}

/// Chain-simulated machine: thermalize the carbon against the bath under the
/// pulse cycle, apply the unitary stroke, then thermalize again.
#[derive(Debug)]
pub struct SimulatedMachine {
    propagator: CyclePropagator,
    cycle: PulseCycle,
    n_sites: usize,
    cycles_per_stroke: usize,
    zeeman: ZeemanParams,
    convention: SpinConvention,
}

/// Carbon excited-state population sampled once per cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeTrace {
    /// Wall-clock time from the start of the stroke.
    pub times: Vec<f64>,
    pub pe: Vec<f64>,
}

/// Result of the first thermalization stroke, reusable across unitaries.
#[derive(Debug, Clone)]
pub struct ThermalizedState {
    pub state: StateVector,
    pub trace: StrokeTrace,
}

#[derive(Debug, Clone)]
pub struct MachineRun {
    pub unitary: MachineUnitary,
    pub record: MachineRecord,
    pub thermalize: StrokeTrace,
    /// Population right after the unitary stroke.
    pub pe_after_unitary: f64,
    pub rethermalize: StrokeTrace,
    /// Energy absorbed by the carbon during the first stroke.
    pub heat_first_stroke: f64,
}

impl MachineRun {
    /// Population lost at the unitary stroke.
    pub fn drop(&self) -> f64 {
        self.thermalize.pe.last().copied().unwrap_or(0.0) - self.pe_after_unitary
    }
}

fn excited_population(psi: &StateVector) -> Result<f64> {
    Ok(partial_trace(psi, &[CARBON])?.population(1))
}

impl SimulatedMachine {
    pub fn new(
        model: &ChainModel,
        cycle: PulseCycle,
        cycles_per_stroke: usize,
        zeeman: ZeemanParams,
        opts: &EvolveOptions,
    ) -> Result<Self> {
        if cycles_per_stroke == 0 {
            return Err(Error::InvalidParameter("cycles per stroke must be positive".into()));
        }
        let h = model.natural_hamiltonian()?;
        Ok(Self {
            propagator: CyclePropagator::new(&h, &cycle, opts)?,
            cycle,
            n_sites: model.n_sites(),
            cycles_per_stroke,
            zeeman,
            convention: model.convention,
        })
    }

    /// Carbon in `|0⟩`, every hydrogen in `|1⟩` (negative-temperature bath).
    pub fn initial_state(&self) -> Result<StateVector> {
        StateVector::product(self.n_sites, |k| k != CARBON)
    }

    /// `⟨H₁⟩` of the carbon in joules.
    fn carbon_energy(&self, psi: &StateVector) -> Result<f64> {
        let h1 = build_zeeman(&self.zeeman, self.convention)?;
        partial_trace(psi, &[CARBON])?.expectation(&h1)
    }

    fn stroke(&self, psi: &StateVector) -> Result<(StateVector, StrokeTrace)> {
        let sched = self.cycle.schedule(self.cycles_per_stroke);
        let mut cur = psi.clone();
        let mut times = vec![0.0];
        let mut pe = vec![excited_population(&cur)?];
        for k in 1..=self.cycles_per_stroke {
            cur = self.propagator.apply(&cur)?;
            times.push(sched.wall_time(k));
            pe.push(excited_population(&cur)?);
        }
        Ok((cur, StrokeTrace { times, pe }))
    }

    /// First stroke, `ρ_ground → ρ₁`.
    pub fn thermalize(&self) -> Result<ThermalizedState> {
        let (state, trace) = self.stroke(&self.initial_state()?)?;
        Ok(ThermalizedState { state, trace })
    }

    /// Unitary stroke and re-thermalization starting from a thermalized state.
    pub fn complete(&self, first: &ThermalizedState, unitary: MachineUnitary) -> Result<MachineRun> {
        let e0 = self.carbon_energy(&self.initial_state()?)?;
        let e1 = self.carbon_energy(&first.state)?;
        let mut after = first.state.clone();
        after.apply_single_site(CARBON, &unitary.matrix())?;
        let e2 = self.carbon_energy(&after)?;
        let pe_after_unitary = excited_population(&after)?;
        let (end, rethermalize) = self.stroke(&after)?;
        let e3 = self.carbon_energy(&end)?;
        let xi = transition_probability(&unitary.matrix())?;
        let unit = self.zeeman.quantum() * self.convention.scale();
        Ok(MachineRun {
            unitary,
            record: MachineRecord::new(xi, e2 - e1, e3 - e2, unit),
            thermalize: first.trace.clone(),
            pe_after_unitary,
            rethermalize,
            heat_first_stroke: e1 - e0,
        })
    }

    pub fn run(&self, unitary: MachineUnitary) -> Result<MachineRun> {
        self.complete(&self.thermalize()?, unitary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let h1 = build_zeeman(&ZeemanParams::default(), SpinConvention::Pauli).unwrap();
        let rho = thermal_state(&h1, InverseTemperature::new(0.0).unwrap()).unwrap();
        assert!((rho.matrix() - DensityMatrix::maximally_mixed(1).matrix()).norm() < 1e-15);
    }

    #[test]
    fn huge_beta_does_not_overflow() {
        let z = ZeemanParams::natural_units(1.0).unwrap();
        let h1 = build_zeeman(&z, SpinConvention::Pauli).unwrap();
        let rho = thermal_state(&h1, InverseTemperature::new(1e4).unwrap()).unwrap();
        assert!((rho.population(0) - 1.0).abs() < 1e-12);
        let rho = thermal_state(&h1, InverseTemperature::new(-1e4).unwrap()).unwrap();
        assert!((rho.population(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn named_unitaries() {
        let xi: Vec<f64> =
            MachineUnitary::ALL.iter().map(|u| transition_probability(&u.matrix()).unwrap()).collect();
        assert!((xi[0] - 0.5).abs() < 1e-15);
        assert!((xi[1] - 0.5).abs() < 1e-15);
        assert!((xi[2] - 1.0).abs() < 1e-15);
        assert!(xi[3] < 1e-30);
        assert_eq!(MachineUnitary::from_name("upi"), Some(MachineUnitary::Upi));
        assert_eq!(MachineUnitary::from_name("U2"), None);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = Matrix2::identity() * Complex64::new(2.0, 0.0);
        assert!(matches!(transition_probability(&m), Err(Error::NonUnitary(_))));
    }

    #[test]
    fn identity_stroke_has_no_efficiency() {
        let (rec, pops) = run_machine_analytic(
            InverseTemperature::new(-1e25).unwrap(),
            &ZeemanParams::default(),
            MachineUnitary::UI,
            SpinConvention::SpinHalf,
        )
        .unwrap();
        let unit = ZeemanParams::default().quantum();
        assert!(rec.work.abs() < 1e-20 * unit);
        assert_eq!(rec.work + rec.heat, 0.0);
        assert_eq!(rec.efficiency, None);
        assert!((pops.thermal - pops.after_unitary).abs() < 1e-20);
    }
}
