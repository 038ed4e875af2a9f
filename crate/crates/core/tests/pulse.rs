mod common;

use common::*;
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use spinforge::model::{build_effective_hamiltonian, build_natural_hamiltonian};
use spinforge::pulse::{conjugate_operator, conjugate_string, rotation};
use spinforge::{
    average_hamiltonian_zeroth, ChainTopology, CouplingConstants, CyclePropagator, EvolveOptions, OperatorSum,
    Pauli, PauliString, PulseCycle, SpinConvention, StateVector,
};

const SPIN_HALF: SpinConvention = SpinConvention::SpinHalf;

fn collective(u: &Matrix2<Complex64>, n: usize) -> DMatrix<Complex64> {
    kron_sites(&vec![to_dmatrix(u); n])
}

/// Columns `U|k⟩` of the cycle propagator.
fn propagator_matrix(p: &CyclePropagator, n: usize) -> DMatrix<Complex64> {
    let dim = 1 << n;
    let mut m = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let out = p.apply(&StateVector::basis(n, k).unwrap()).unwrap();
        for (r, a) in out.amplitudes().iter().enumerate() {
            m[(r, k)] = *a;
        }
    }
    m
}

/// `e^{-iHΔt/2} P4 e^{-iHΔt} P3 e^{-iHΔt} P2 e^{-iHΔt} P1 e^{-iHΔt/2}` from dense pieces.
fn dense_cycle(h: &DMatrix<Complex64>, cycle: &PulseCycle, n: usize) -> DMatrix<Complex64> {
    let dt = cycle.delta_t();
    let half = expm_hermitian(h, dt / 2.0);
    let full = expm_hermitian(h, dt);
    let p: Vec<_> = cycle.pulses().iter().map(|p| collective(&p.site_unitary(SPIN_HALF), n)).collect();
    &half * &p[3] * &full * &p[2] * &full * &p[1] * &full * &p[0] * &half
}

fn model_parts(n: usize) -> (ChainTopology, CouplingConstants) {
    (ChainTopology::new(n).unwrap(), CouplingConstants::from_effective(550.0, 980.0).unwrap())
}

fn max_coefficient_residual(a: &OperatorSum, b: &OperatorSum) -> f64 {
    let diff = a.add(&b.scaled(c(-1.0, 0.0))).unwrap();
    // Merge without the relative cutoff so that tiny residues stay visible.
    let mut merged: std::collections::HashMap<(u64, u64), Complex64> = Default::default();
    for t in diff.terms() {
        *merged.entry((t.x_mask(), t.z_mask())).or_default() += t.coeff();
    }
    merged.values().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn averaged_natural_hamiltonian_is_the_effective_one() {
    for n in 1..=3 {
        let (t, cc) = model_parts(n);
        let cycle = PulseCycle::four_pulse(1.228e-6, 9.89e-6).unwrap();
        let hbar = average_hamiltonian_zeroth(&build_natural_hamiltonian(&t, &cc, SPIN_HALF).unwrap(), &cycle).unwrap();
        let eff = build_effective_hamiltonian(&t, &cc, SPIN_HALF).unwrap();
        assert!(max_coefficient_residual(&hbar, &eff) < 1e-14, "n = {n}");
    }
}

#[test]
fn averaging_matches_dense_conjugation() {
    let (t, cc) = model_parts(1);
    let n = t.n_sites();
    let cycle = PulseCycle::four_pulse(1e-6, 0.0).unwrap();
    let h = build_natural_hamiltonian(&t, &cc, SPIN_HALF).unwrap();
    let hd = h.to_dense().unwrap();
    let mut want = DMatrix::<Complex64>::zeros(1 << n, 1 << n);
    let mut tj = DMatrix::<Complex64>::identity(1 << n, 1 << n);
    let weights = [0.5, 1.0, 1.0, 1.0, 0.5];
    want += &hd * c(weights[0] / 4.0, 0.0);
    for (p, w) in cycle.pulses().iter().zip(&weights[1..]) {
        tj = collective(&p.site_unitary(SPIN_HALF), n) * tj;
        want += tj.adjoint() * &hd * &tj * c(w / 4.0, 0.0);
    }
    let got = average_hamiltonian_zeroth(&h, &cycle).unwrap().to_dense().unwrap();
    assert!(max_matrix_diff(&got, &want) < 1e-12);
}

#[test]
fn hydrogen_bond_averages_to_quarter_coupling() {
    let t = ChainTopology::new(2).unwrap();
    let cc = CouplingConstants::new(0.0, 3920.0).unwrap();
    let cycle = PulseCycle::four_pulse(1e-6, 0.0).unwrap();
    let hbar = average_hamiltonian_zeroth(&build_natural_hamiltonian(&t, &cc, SpinConvention::Pauli).unwrap(), &cycle);
    // Pauli-mode pulses are π rotations, which leave every bilinear invariant.
    let nat = build_natural_hamiltonian(&t, &cc, SpinConvention::Pauli).unwrap();
    assert!(max_coefficient_residual(&hbar.unwrap(), &nat) < 1e-12);
    let hbar = average_hamiltonian_zeroth(&build_natural_hamiltonian(&t, &cc, SPIN_HALF).unwrap(), &cycle).unwrap();
    let zz = hbar.coefficient_of(&[(1, Pauli::Z), (2, Pauli::Z)]).unwrap().re;
    let xx = hbar.coefficient_of(&[(1, Pauli::X), (2, Pauli::X)]).unwrap().re;
    // (J/4)·2·(1/4) and −(J/4)·(1/4) in bare-Pauli coefficients.
    assert_eq!((zz, xx), (490.0, -245.0));
}

#[test]
fn rotation_invariant_hamiltonian_is_unchanged() {
    let mut h = OperatorSum::new(3, SPIN_HALF).unwrap();
    for p in Pauli::ALL {
        h.add_spin_product(1.7, &[(0, p), (1, p)]).unwrap();
        h.add_spin_product(-0.4, &[(1, p), (2, p)]).unwrap();
    }
    let cycle = PulseCycle::four_pulse(1e-6, 0.0).unwrap();
    assert!(max_coefficient_residual(&average_hamiltonian_zeroth(&h, &cycle).unwrap(), &h) < 1e-14);
}

#[test]
fn full_turn_about_y_is_identity_up_to_sign() {
    let u = rotation(Pauli::Y, 2.0 * std::f64::consts::PI, SPIN_HALF);
    assert!((u + Matrix2::identity()).norm() < 1e-15);
}

#[test]
fn single_cycle_matches_dense_product() {
    for n in 1..=2 {
        let (t, cc) = model_parts(n);
        let h = build_natural_hamiltonian(&t, &cc, SPIN_HALF).unwrap();
        let cycle = PulseCycle::four_pulse(15.10e-6, 9.89e-6).unwrap();
        let p = CyclePropagator::new(&h, &cycle, &EvolveOptions::default()).unwrap();
        let got = propagator_matrix(&p, t.n_sites());
        let want = dense_cycle(&h.to_dense().unwrap(), &cycle, t.n_sites());
        assert!(max_matrix_diff(&got, &want) < 1e-12);
        let dim = 1 << t.n_sites();
        assert!((got.adjoint() * &got - DMatrix::identity(dim, dim)).norm() < 1e-10);
    }
}

#[test]
fn null_hamiltonian_cycle_is_identity() {
    let h = OperatorSum::new(3, SPIN_HALF).unwrap();
    let p = CyclePropagator::new(&h, &PulseCycle::four_pulse(1e-6, 1e-6).unwrap(), &EvolveOptions::default()).unwrap();
    let u = propagator_matrix(&p, 3);
    assert!(max_matrix_diff(&u, &DMatrix::identity(8, 8)) < 1e-15);
}

fn cycle_error(dt: f64) -> (f64, f64) {
    let (t, cc) = model_parts(1);
    let h = build_natural_hamiltonian(&t, &cc, SPIN_HALF).unwrap();
    let eff = build_effective_hamiltonian(&t, &cc, SPIN_HALF).unwrap().to_dense().unwrap();
    let cycle = PulseCycle::four_pulse(dt, 0.0).unwrap();
    let u = propagator_matrix(&CyclePropagator::new(&h, &cycle, &EvolveOptions::default()).unwrap(), 3);
    let dim = 8;
    ((&u - expm_hermitian(&eff, 4.0 * dt)).norm(), (&u - DMatrix::identity(dim, dim)).norm())
}

#[test]
fn cycle_approaches_effective_evolution() {
    let (err, _) = cycle_error(0.10e-6);
    assert!(err < 1e-4, "{err:e}");
    let mut prev = f64::INFINITY;
    for k in 0..8 {
        let (err, from_identity) = cycle_error(20e-6 / f64::powi(2.0, k));
        assert!(err < prev, "error did not shrink at step {k}");
        prev = err;
        // Continuity: ‖U − 𝕀‖ = O(Δt).
        assert!(from_identity < 4.0 * 20e-6 / f64::powi(2.0, k) * 2000.0);
    }
}

fn random_string(seed: u64, n: usize) -> PauliString {
    let mut r = rng(seed);
    let factors: Vec<_> = (0..n)
        .filter_map(|s| match r.random_range(0..4) {
            0 => None,
            k => Some((s, Pauli::from_index(k - 1))),
        })
        .collect();
    PauliString::new(c(r.random::<f64>() - 0.5, 0.0), &factors).unwrap()
}

fn dense_string(p: &PauliString, n: usize) -> DMatrix<Complex64> {
    let mats: Vec<_> = (0..n)
        .map(|s| p.factor(s).map(|f| to_dmatrix(&f.matrix())).unwrap_or_else(|| DMatrix::identity(2, 2)))
        .collect();
    kron_sites(&mats) * p.coeff()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quarter_turns_map_strings_to_single_strings(seed in 0u64..100_000, n in 1usize..5, axis in 0usize..4) {
        let cycle = PulseCycle::four_pulse(1e-6, 0.0).unwrap();
        let u = cycle.pulses()[axis].site_unitary(SPIN_HALF);
        let s = random_string(seed, n);
        let out = conjugate_string(&s, &u);
        prop_assert_eq!(out.len(), 1);
        prop_assert_eq!(out[0].coeff().norm(), s.coeff().norm());
        let full = collective(&u, n);
        let want = full.adjoint() * dense_string(&s, n) * &full;
        prop_assert!(max_matrix_diff(&dense_string(&out[0], n), &want) < 1e-12);
    }

    #[test]
    fn general_rotations_conjugate_like_dense(seed in 0u64..100_000, n in 1usize..4, theta in -6.3f64..6.3, axis in 0usize..3) {
        let u = rotation(Pauli::from_index(axis), theta, SPIN_HALF);
        let s = random_string(seed, n);
        let op = OperatorSum::from_terms(n, SPIN_HALF, [s]).unwrap();
        let full = collective(&u, n);
        let want = full.adjoint() * dense_string(&s, n) * &full;
        prop_assert!(max_matrix_diff(&conjugate_operator(&op, &u).to_dense().unwrap(), &want) < 1e-12);
    }
}
