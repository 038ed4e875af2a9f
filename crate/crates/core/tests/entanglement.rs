mod common;

use common::*;
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;
use spinforge::dynamics::{binary_entropy, eof_from_concurrence};
use spinforge::{concurrence, eof, partial_trace, DensityMatrix, Error, Pauli};

fn bell() -> DMatrix<Complex64> {
    let s = 0.5;
    DMatrix::from_fn(4, 4, |r, q| if (r == 0 || r == 3) && (q == 0 || q == 3) { c(s, 0.0) } else { c(0.0, 0.0) })
}

fn werner(p: f64) -> DMatrix<Complex64> {
    bell() * c(p, 0.0) + DMatrix::identity(4, 4) * c((1.0 - p) / 4.0, 0.0)
}

/// Concurrence from the eigenvalues of the non-Hermitian product `ρ ρ̃`,
/// which share their spectrum with `√ρ ρ̃ √ρ`.
fn brute_force_concurrence(rho: &DMatrix<Complex64>) -> f64 {
    let y = pauli_op(2, 0, Pauli::Y) * pauli_op(2, 1, Pauli::Y);
    let tilde = &y * rho.conjugate() * &y;
    let prod = rho * tilde;
    let m = Matrix4::from_fn(|r, q| prod[(r, q)]);
    let mut ev: Vec<f64> = m.eigenvalues().unwrap().iter().map(|z| z.re.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    (ev[0] - ev[1] - ev[2] - ev[3]).max(0.0)
}

fn complex_eigen_concurrence(rho: &DMatrix<Complex64>) -> f64 {
    // nalgebra has no general complex eigensolver; go through the real 8×8 embedding.
    let y = pauli_op(2, 0, Pauli::Y) * pauli_op(2, 1, Pauli::Y);
    let prod = rho * (&y * rho.conjugate() * &y);
    let real = DMatrix::<f64>::from_fn(8, 8, |r, q| {
        let z = prod[(r % 4, q % 4)];
        match (r / 4, q / 4) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    // Each eigenvalue appears twice (λ and its conjugate image).
    let mut ev: Vec<f64> = real.complex_eigenvalues().iter().map(|z| z.re.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let ev: Vec<f64> = ev.chunks(2).map(|p| p[0]).collect();
    (ev[0] - ev[1] - ev[2] - ev[3]).max(0.0)
}

fn random_two_qubit_state(seed: u64, rank: usize) -> DMatrix<Complex64> {
    let mut r = rng(seed);
    let mut rho = DMatrix::<Complex64>::zeros(4, 4);
    for _ in 0..rank {
        let v = nalgebra::DVector::from_vec(random_amplitudes(&mut r, 4));
        rho += &v * v.adjoint();
    }
    rho / c(rank as f64, 0.0)
}

#[test]
fn bell_state_is_maximally_entangled() {
    let rho = DensityMatrix::new(bell()).unwrap();
    let cc = concurrence(&rho).unwrap();
    assert!((cc - 1.0).abs() < 1e-12, "{cc}");
    assert!((eof(&rho).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn product_states_are_separable() {
    let mut r = rng(4);
    for _ in 0..10 {
        let a = nalgebra::DVector::from_vec(random_amplitudes(&mut r, 2));
        let b = nalgebra::DVector::from_vec(random_amplitudes(&mut r, 2));
        // Site 0 is the least significant bit.
        let v = b.kronecker(&a);
        let rho = DensityMatrix::new(&v * v.adjoint()).unwrap();
        assert!(concurrence(&rho).unwrap() < 1e-7);
        assert!(eof(&rho).unwrap() < 1e-6);
    }
}

#[test]
fn werner_state_concurrence() {
    let rho = werner(0.8);
    assert!((brute_force_concurrence(&rho) - 0.7).abs() < 1e-12);
    assert!((concurrence(&DensityMatrix::new(rho).unwrap()).unwrap() - 0.7).abs() < 1e-12);
    for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.95] {
        let want = ((3.0 * p - 1.0) / 2.0f64).max(0.0);
        let got = concurrence(&DensityMatrix::new(werner(p)).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-10, "p = {p}");
    }
}

#[test]
fn partial_state_of_bell_pair_in_larger_register() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // (|000⟩ + |101⟩)/√2: sites 0 and 2 entangled, site 1 idle.
    let mut amps = vec![c(0.0, 0.0); 8];
    amps[0] = c(s, 0.0);
    amps[0b101] = c(s, 0.0);
    let psi = spinforge::StateVector::from_amplitudes(3, amps).unwrap();
    assert!((eof(&partial_trace(&psi, &[0, 2]).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    assert!(eof(&partial_trace(&psi, &[0, 1]).unwrap()).unwrap() < 1e-12);
}

#[test]
fn eof_of_known_concurrence() {
    assert_eq!(eof_from_concurrence(0.0), 0.0);
    assert!((eof_from_concurrence(1.0) - 1.0).abs() < 1e-15);
    let x = 0.5 * (1.0 + (1.0f64 - 0.49).sqrt());
    assert!((eof_from_concurrence(0.7) - binary_entropy(x)).abs() < 1e-15);
    assert_eq!(binary_entropy(0.5), 1.0);
}

#[test]
fn non_physical_input_is_rejected() {
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    m[(0, 0)] = c(1.2, 0.0);
    m[(1, 1)] = c(-0.2, 0.0);
    let rho = spinforge::density::DensityMatrix::new(m);
    // Either construction or the concurrence check must refuse it.
    match rho {
        Err(_) => {}
        Ok(r) => assert!(matches!(concurrence(&r), Err(Error::NonPhysical(_)))),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn concurrence_is_bounded_and_matches_oracles(seed in 0u64..100_000, rank in 1usize..5) {
        let m = random_two_qubit_state(seed, rank);
        let got = concurrence(&DensityMatrix::new(m.clone()).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert!((got - complex_eigen_concurrence(&m)).abs() < 1e-6);
        let e = eof_from_concurrence(got);
        prop_assert!((0.0..=1.0).contains(&e));
    }
}
