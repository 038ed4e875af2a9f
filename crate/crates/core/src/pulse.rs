//! Collective pulses, the four-pulse cycle, toggling-frame averaging and
//! the cycle propagator.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::OperatorSum;
use crate::pauli::{Pauli, PauliString, SpinConvention};
use crate::propagate::{EvolveOptions, Propagator};
use crate::state::StateVector;

/// Tolerance on `P_M ⋯ P_1 ∝ 𝕀`.
pub const CYCLIC_TOL: f64 = 1e-12;

/// Rotation-matrix entries this close to -1, 0 or 1 are snapped exactly.
const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseAxis {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl PulseAxis {
    pub fn pauli(self) -> Pauli {
        match self {
            PulseAxis::PlusX | PulseAxis::MinusX => Pauli::X,
            PulseAxis::PlusY | PulseAxis::MinusY => Pauli::Y,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            PulseAxis::PlusX | PulseAxis::PlusY => 1.0,
            PulseAxis::MinusX | PulseAxis::MinusY => -1.0,
        }
    }
}

/// A collective rotation `exp(-iθ Σ_k ±S_axis^{(k)})` applied to every site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub axis: PulseAxis,
    /// Rotation angle in radians.
    pub angle: f64,
    /// Pulse width in seconds; only enters the wall-clock schedule.
    pub duration: f64,
}

impl Pulse {
    pub fn new(axis: PulseAxis, angle: f64, duration: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidParameter("pulse angle must be finite".into()));
        }
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("pulse duration must be ≥ 0, got {duration}")));
        }
        Ok(Self { axis, angle, duration })
    }

    /// π/2 pulse about `axis`.
    pub fn quarter(axis: PulseAxis, duration: f64) -> Result<Self> {
        Self::new(axis, std::f64::consts::FRAC_PI_2, duration)
    }

    /// Single-site factor of the collective rotation.
    pub fn site_unitary(&self, convention: SpinConvention) -> Matrix2<Complex64> {
        rotation(self.axis.pauli(), self.axis.sign() * self.angle, convention)
    }
}

/// `exp(-iθ S_axis)` on one site, with `S = scale·σ`.
pub fn rotation(axis: Pauli, theta: f64, convention: SpinConvention) -> Matrix2<Complex64> {
    let phi = theta * convention.scale();
    let c = Complex64::new(phi.cos(), 0.0);
    let s = Complex64::new(0.0, -phi.sin());
    Matrix2::identity() * c + axis.matrix() * s
}

/// Single-site unitary of a collective pulse; the full-register unitary is
/// its `n_sites`-fold tensor power.
pub fn pulse_unitary(p: &Pulse, convention: SpinConvention) -> Matrix2<Complex64> {
    if convention == SpinConvention::Pauli {
        log::warn!("pulse angles are defined for spin-half generators; pauli mode doubles every rotation");
    }
    p.site_unitary(convention)
}

/// Applies the same single-site unitary to every site.
pub fn apply_collective(u: &Matrix2<Complex64>, psi: &mut StateVector) {
    for site in 0..psi.n_sites() {
        psi.apply_single_site(site, u).expect("site in range");
    }
}

/// `O[a][b] = ½ Tr(σ_b U† σ_a U)`, so that `U† σ_a U = Σ_b O[a][b] σ_b`.
fn adjoint_action(u: &Matrix2<Complex64>) -> [[f64; 3]; 3] {
    let ud = u.adjoint();
    let mut o = [[0.0; 3]; 3];
    for a in Pauli::ALL {
        let conj = ud * a.matrix() * u;
        for b in Pauli::ALL {
            let v = 0.5 * (b.matrix() * conj).trace().re;
            let r = v.round();
            o[a.index()][b.index()] = if (v - r).abs() < SNAP_TOL { r } else { v };
        }
    }
    o
}

/// `U^{⊗n}† P U^{⊗n}` expanded in Pauli strings. Quarter-turn rotations
/// map a string to exactly one string.
pub fn conjugate_string(p: &PauliString, u: &Matrix2<Complex64>) -> Vec<PauliString> {
    let o = adjoint_action(u);
    let mut out = vec![PauliString::identity(p.coeff())];
    for (site, a) in p.factors() {
        let mut next = Vec::with_capacity(out.len() * 3);
        for partial in &out {
            for b in Pauli::ALL {
                let w = o[a.index()][b.index()];
                if w == 0.0 {
                    continue;
                }
                let mut factors: Vec<(usize, Pauli)> = partial.factors().collect();
                factors.push((site, b));
                let s = PauliString::new(partial.coeff() * w, &factors).expect("distinct sites");
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// `U^{⊗n}† H U^{⊗n}` for a collective single-site unitary.
pub fn conjugate_operator(h: &OperatorSum, u: &Matrix2<Complex64>) -> OperatorSum {
    let terms = h.terms().iter().flat_map(|t| conjugate_string(t, u));
    OperatorSum::from_terms(h.n_sites(), h.convention(), terms)
        .expect("conjugation preserves sites")
        .simplify()
}

/// Cumulative pulse product and the free-evolution weight spent in it.
#[derive(Debug, Clone, PartialEq)]
pub struct TogglingFrame {
    /// `T_j = P_j ⋯ P_1` (single-site factor).
    pub transform: Matrix2<Complex64>,
    /// Duration in units of Δt.
    pub weight: f64,
}

/// Pulses separated by free evolution of Δt, with half-steps at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseCycle {
    pulses: Vec<Pulse>,
    delta_t: f64,
}

impl PulseCycle {
    pub fn new(pulses: Vec<Pulse>, delta_t: f64) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::InvalidParameter("a cycle needs at least one pulse".into()));
        }
        if !(delta_t > 0.0 && delta_t.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta_t must be positive, got {delta_t}")));
        }
        Ok(Self { pulses, delta_t })
    }

    /// The `x, -x, y, -y` sequence of π/2 pulses.
    pub fn four_pulse(delta_t: f64, tau_p: f64) -> Result<Self> {
        let pulses = [PulseAxis::PlusX, PulseAxis::MinusX, PulseAxis::PlusY, PulseAxis::MinusY]
            .into_iter()
            .map(|a| Pulse::quarter(a, tau_p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pulses, delta_t)
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Free-evolution segments in units of Δt: `½, 1, …, 1, ½`.
    pub fn segment_weights(&self) -> Vec<f64> {
        let m = self.pulses.len();
        (0..=m).map(|j| if j == 0 || j == m { 0.5 } else { 1.0 }).collect()
    }

    /// Free-evolution time per cycle, `M·Δt`.
    pub fn free_time(&self) -> f64 {
        self.pulses.len() as f64 * self.delta_t
    }

    /// Wall-clock cycle time, free evolution plus pulse widths.
    pub fn cycle_time(&self) -> f64 {
        self.free_time() + self.pulses.iter().map(|p| p.duration).sum::<f64>()
    }

    /// `‖P_M⋯P_1 − (tr/2)𝕀‖_F` of the single-site product.
    pub fn cyclicity_residual(&self, convention: SpinConvention) -> f64 {
        let prod = self.pulses.iter().fold(Matrix2::identity(), |acc, p| p.site_unitary(convention) * acc);
        let avg = prod.trace() * 0.5;
        (prod - Matrix2::identity() * avg).norm()
    }

    pub fn ensure_cyclic(&self, convention: SpinConvention) -> Result<()> {
        let r = self.cyclicity_residual(convention);
        if r > CYCLIC_TOL {
            return Err(Error::NonCyclic(r));
        }
        Ok(())
    }

    /// Frames `T_0 = 𝕀, T_1 = P_1, …, T_M = P_M⋯P_1` with their weights.
    pub fn toggling_frames(&self, convention: SpinConvention) -> Vec<TogglingFrame> {
        let weights = self.segment_weights();
        let mut t = Matrix2::identity();
        let mut frames = vec![TogglingFrame { transform: t, weight: weights[0] }];
        for (p, &w) in self.pulses.iter().zip(&weights[1..]) {
            t = p.site_unitary(convention) * t;
            frames.push(TogglingFrame { transform: t, weight: w });
        }
        frames
    }

    /// Wall-clock timing for `n_cycles` repetitions.
    pub fn schedule(&self, n_cycles: usize) -> Schedule {
        Schedule {
            cycle_time: self.cycle_time(),
            free_time: self.free_time(),
            n_cycles,
        }
    }
}

/// Zeroth-order average Hamiltonian `(1/t) Σ_j Δt_j T_j† H T_j`.
pub fn average_hamiltonian_zeroth(h: &OperatorSum, cycle: &PulseCycle) -> Result<OperatorSum> {
    cycle.ensure_cyclic(h.convention())?;
    let frames = cycle.toggling_frames(h.convention());
    let total: f64 = frames.iter().map(|f| f.weight).sum();
    let mut acc = OperatorSum::new(h.n_sites(), h.convention())?;
    for f in &frames {
        let part = conjugate_operator(h, &f.transform).scaled(Complex64::new(f.weight / total, 0.0));
        for t in part.terms() {
            acc.push(*t)?;
        }
    }
    Ok(acc.simplify())
}

/// Cycle timing table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// `τ_c = M·Δt + Σ τ_p`.
    pub cycle_time: f64,
    /// Time per cycle under the Hamiltonian, `M·Δt`.
    pub free_time: f64,
    pub n_cycles: usize,
}

impl Schedule {
    pub fn total_time(&self) -> f64 {
        self.n_cycles as f64 * self.cycle_time
    }

    pub fn total_free_time(&self) -> f64 {
        self.n_cycles as f64 * self.free_time
    }

    /// Wall-clock time at the end of cycle `k`.
    pub fn wall_time(&self, k: usize) -> f64 {
        k as f64 * self.cycle_time
    }

    pub fn free_time_at(&self, k: usize) -> f64 {
        k as f64 * self.free_time
    }
}

/// The one-cycle propagator
/// `e^{-iHΔt/2} P_M e^{-iHΔt} ⋯ P_1 e^{-iHΔt/2}` acting on states.
#[derive(Debug)]
pub struct CyclePropagator {
    free: Propagator,
    pulses: Vec<Matrix2<Complex64>>,
    weights: Vec<f64>,
    delta_t: f64,
}

impl CyclePropagator {
    pub fn new(h: &OperatorSum, cycle: &PulseCycle, opts: &EvolveOptions) -> Result<Self> {
        let convention = h.convention();
        if let Err(e) = cycle.ensure_cyclic(convention) {
            log::warn!("{e}; the averaged description does not apply");
        }
        Ok(Self {
            free: Propagator::new(h, opts)?,
            pulses: cycle.pulses().iter().map(|p| pulse_unitary(p, convention)).collect(),
            weights: cycle.segment_weights(),
            delta_t: cycle.delta_t(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.free.n_sites()
    }

    /// Advances `psi` by one cycle.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = self.free.evolve(psi, self.weights[0] * self.delta_t)?;
        for (u, &w) in self.pulses.iter().zip(&self.weights[1..]) {
            apply_collective(u, &mut out);
            out = self.free.evolve(&out, w * self.delta_t)?;
        }
        Ok(out)
    }

    /// Advances `psi` by `n` cycles.
    pub fn apply_n(&self, psi: &StateVector, n: usize) -> Result<StateVector> {
        let mut out = psi.clone();
        for _ in 0..n {
            out = self.apply(&out)?;
        }
        Ok(out)
    }
}
