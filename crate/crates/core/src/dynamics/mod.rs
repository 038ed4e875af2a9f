//! Magnetization and entanglement trajectories under the engineered
//! Hamiltonian or the explicit pulse cycle.

pub mod entanglement;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::{partial_trace, DensityMatrix};
use crate::error::{Error, Result};
use crate::model::{ChainModel, Chain, CARBON};
use crate::propagate::{EvolveOptions, Propagator};
use crate::pulse::{CyclePropagator, PulseCycle};
use crate::state::StateVector;

pub use entanglement::{binary_entropy, concurrence, eof, eof_from_concurrence};

/// Default number of bitstring samples for a maximally mixed bath.
pub const DEFAULT_ENSEMBLE_SAMPLES: usize = 32;

/// Default number of sample points for effective-Hamiltonian runs.
pub const DEFAULT_EFFECTIVE_POINTS: usize = 500;

/// Initial state of one site or of all hydrogens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalState {
    /// `|0⟩`, σ_z = +1.
    Ground,
    /// `|1⟩`, σ_z = −1.
    Excited,
    /// `I/2`, sampled as a uniformly random bit.
    MaximallyMixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitialCondition {
    pub carbon: LocalState,
    pub bath: LocalState,
}

impl InitialCondition {
    pub fn new(carbon: LocalState, bath: LocalState) -> Self {
        Self { carbon, bath }
    }

    pub fn is_pure(&self) -> bool {
        self.carbon != LocalState::MaximallyMixed && self.bath != LocalState::MaximallyMixed
    }

    fn draw(state: LocalState, rng: &mut ChaCha8Rng) -> bool {
        match state {
            LocalState::Ground => false,
            LocalState::Excited => true,
            LocalState::MaximallyMixed => rng.random::<bool>(),
        }
    }

    fn sample(&self, n_sites: usize, rng: &mut ChaCha8Rng) -> Result<StateVector> {
        let bits: Vec<bool> = (0..n_sites)
            .map(|k| Self::draw(if k == CARBON { self.carbon } else { self.bath }, rng))
            .collect();
        StateVector::product(n_sites, |k| bits[k])
    }
}

/// Equally weighted pure states whose mixture is the initial density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<StateVector>,
}

impl Ensemble {
    pub fn pure(psi: StateVector) -> Self {
        Self { members: vec![psi] }
    }

    pub fn new(members: Vec<StateVector>) -> Result<Self> {
        let n = members.first().map(StateVector::n_sites).ok_or_else(|| {
            Error::InvalidParameter("an ensemble needs at least one member".into())
        })?;
        if let Some(bad) = members.iter().find(|m| m.n_sites() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.n_sites() });
        }
        Ok(Self { members })
    }

    /// One member for pure conditions, otherwise `samples` seeded random bitstrings.
    pub fn from_condition(cond: &InitialCondition, n_sites: usize, samples: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = if cond.is_pure() { 1 } else { samples };
        if count == 0 {
            return Err(Error::InvalidParameter("ensemble sample count must be positive".into()));
        }
        Self::new((0..count).map(|_| cond.sample(n_sites, &mut rng)).collect::<Result<_>>()?)
    }

    pub fn members(&self) -> &[StateVector] {
        &self.members
    }

    pub fn n_sites(&self) -> usize {
        self.members[0].n_sites()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Sampled carbon magnetization and optional carbon–hydrogen entanglement.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Wall-clock sample times in seconds.
    pub times: Vec<f64>,
    /// Time spent under the Hamiltonian (equals `times` for effective runs).
    pub effective_times: Vec<f64>,
    /// `⟨σ_z⟩` of the carbon.
    pub mz: Vec<f64>,
    /// EoF between the carbon and the first hydrogen of chain `a`.
    pub eof: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean of `values` over the last `fraction` of the samples.
    pub fn tail_mean(values: &[f64], fraction: f64) -> f64 {
        let n = values.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n.max(1));
        let tail = &values[n - k..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    pub fn tail_mean_mz(&self, fraction: f64) -> f64 {
        Self::tail_mean(&self.mz, fraction)
    }

    pub fn tail_mean_eof(&self, fraction: f64) -> Option<f64> {
        self.eof.as_deref().map(|e| Self::tail_mean(e, fraction))
    }

    /// Largest EoF and the time it is reached.
    pub fn peak_eof(&self) -> Option<(f64, f64)> {
        let e = self.eof.as_deref()?;
        e.iter()
            .zip(&self.times)
            .fold(None, |best: Option<(f64, f64)>, (&v, &t)| match best {
                Some((b, _)) if b >= v => best,
                _ => Some((v, t)),
            })
    }
}

/// Per-sample observables of one ensemble member.
struct Samples {
    mz: Vec<f64>,
    pair: Vec<DMatrix<Complex64>>,
}

fn observe(psi: &StateVector, pair_site: usize, track_eof: bool, out: &mut Samples) -> Result<()> {
    out.mz.push(psi.sigma_z(CARBON)?);
    if track_eof {
        out.pair.push(partial_trace(psi, &[CARBON, pair_site])?.into_matrix());
    }
    Ok(())
}

/// Runs `step` from every member for `n_points - 1` steps and averages the
/// observables in member order.
fn sample_ensemble<F>(
    ensemble: &Ensemble,
    n_points: usize,
    pair_site: usize,
    track_eof: bool,
    step: F,
) -> Result<(Vec<f64>, Option<Vec<f64>>)>
where
    F: Fn(&StateVector) -> Result<StateVector> + Sync,
{
    let per_member: Vec<Samples> = ensemble
        .members()
        .par_iter()
        .map(|psi0| {
            let mut s = Samples { mz: Vec::with_capacity(n_points), pair: Vec::new() };
            let mut psi = psi0.clone();
            observe(&psi, pair_site, track_eof, &mut s)?;
            for _ in 1..n_points {
                psi = step(&psi)?;
                observe(&psi, pair_site, track_eof, &mut s)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;

    let w = 1.0 / per_member.len() as f64;
    let mz = (0..n_points).map(|k| per_member.iter().map(|s| s.mz[k]).sum::<f64>() * w).collect();
    let eof = if track_eof {
        let mut out = Vec::with_capacity(n_points);
        for k in 0..n_points {
            let mut rho = DMatrix::<Complex64>::zeros(4, 4);
            for s in &per_member {
                rho += &s.pair[k];
            }
            rho *= Complex64::new(w, 0.0);
            out.push(eof(&DensityMatrix::new(rho)?)?);
        }
        Some(out)
    } else {
        None
    };
    Ok((mz, eof))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub evolve: EvolveOptions,
    pub track_eof: bool,
}

/// Evolution under the engineered Hamiltonian, sampled at `n_points`
/// uniform times `0, T/(n-1), …, T`.
pub fn run_effective(
    model: &ChainModel,
    ensemble: &Ensemble,
    t_total: f64,
    n_points: usize,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_sites(model, ensemble)?;
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(Error::InvalidParameter(format!("total time must be positive, got {t_total}")));
    }
    if n_points < 2 {
        return Err(Error::InvalidParameter("a trajectory needs at least two points".into()));
    }
    let h = model.effective_hamiltonian()?;
    let prop = Propagator::new(&h, &opts.evolve)?;
    let dt = t_total / (n_points - 1) as f64;
    let pair = model.topology.first_hydrogen(Chain::A);
    let (mz, eof) = sample_ensemble(ensemble, n_points, pair, opts.track_eof, |psi| prop.evolve(psi, dt))?;
    let times: Vec<f64> = (0..n_points).map(|k| k as f64 * dt).collect();
    Ok(Trajectory { effective_times: times.clone(), times, mz, eof })
}

/// Repeated application of the natural-Hamiltonian cycle propagator,
/// sampled once per cycle (including the initial state).
pub fn run_pulsed(
    model: &ChainModel,
    cycle: &PulseCycle,
    ensemble: &Ensemble,
    n_cycles: usize,
    opts: &RunOptions,
) -> Result<Trajectory> {
    check_sites(model, ensemble)?;
    if n_cycles == 0 {
        return Err(Error::InvalidParameter("cycle count must be positive".into()));
    }
    let h = model.natural_hamiltonian()?;
    let prop = CyclePropagator::new(&h, cycle, &opts.evolve)?;
    let pair = model.topology.first_hydrogen(Chain::A);
    let (mz, eof) = sample_ensemble(ensemble, n_cycles + 1, pair, opts.track_eof, |psi| prop.apply(psi))?;
    let sched = cycle.schedule(n_cycles);
    Ok(Trajectory {
        times: (0..=n_cycles).map(|k| sched.wall_time(k)).collect(),
        effective_times: (0..=n_cycles).map(|k| sched.free_time_at(k)).collect(),
        mz,
        eof,
    })
}

fn check_sites(model: &ChainModel, ensemble: &Ensemble) -> Result<()> {
    if ensemble.n_sites() != model.n_sites() {
        return Err(Error::DimensionMismatch { expected: model.n_sites(), got: ensemble.n_sites() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_mean_uses_last_fraction() {
        let v: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(Trajectory::tail_mean(&v, 0.2), 8.5);
        assert_eq!(Trajectory::tail_mean(&v, 1.0), 4.5);
    }

    #[test]
    fn pure_condition_has_one_member() {
        let c = InitialCondition::new(LocalState::Excited, LocalState::Ground);
        let e = Ensemble::from_condition(&c, 5, 32, 7).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.members()[0].amplitudes()[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn mixed_bath_is_seeded() {
        let c = InitialCondition::new(LocalState::Excited, LocalState::MaximallyMixed);
        let a = Ensemble::from_condition(&c, 7, 32, 11).unwrap();
        let b = Ensemble::from_condition(&c, 7, 32, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 32);
        assert!(a.members().iter().all(|m| m.sigma_z(0).unwrap() == -1.0));
        assert_ne!(a, Ensemble::from_condition(&c, 7, 32, 12).unwrap());
    }

    #[test]
    fn peak_eof_picks_first_maximum() {
        let t = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            effective_times: vec![0.0, 1.0, 2.0],
            mz: vec![0.0; 3],
            eof: Some(vec![0.1, 0.4, 0.4]),
        };
        assert_eq!(t.peak_eof(), Some((0.4, 1.0)));
    }
}
