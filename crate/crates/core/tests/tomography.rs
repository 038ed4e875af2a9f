mod common;

use common::*;
use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use spinforge::pulse::rotation;
use spinforge::tomography::{chi_from_kraus, relaxation_to_ground_kraus, ThermalizationChannel};
use spinforge::{
    process_fidelity, reconstruct_chi, ChainModel, ChainTopology, CouplingConstants, DensityMatrix, Ensemble,
    Error, EvolveOptions, InitialCondition, LocalState, OperatorBasis, Pauli, ProcessMatrix, SpinConvention,
};

const BASES: [OperatorBasis; 2] = [OperatorBasis::RealPauli, OperatorBasis::Pauli];

fn to_dense2(m: &Matrix2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

fn kraus_channel(kraus: Vec<Matrix2<Complex64>>) -> impl Fn(&DensityMatrix) -> spinforge::Result<DensityMatrix> {
    move |rho: &DensityMatrix| {
        let r = rho.matrix();
        let out = kraus.iter().fold(DMatrix::zeros(2, 2), |acc, k| {
            let kd = to_dense2(k);
            acc + &kd * r * kd.adjoint()
        });
        DensityMatrix::new(out)
    }
}

fn random_unitary(seed: u64) -> Matrix2<Complex64> {
    let mut r = rng(seed);
    let mut a = || r.random::<f64>() * 6.3;
    rotation(Pauli::Z, a(), SpinConvention::SpinHalf)
        * rotation(Pauli::Y, a(), SpinConvention::SpinHalf)
        * rotation(Pauli::Z, a(), SpinConvention::SpinHalf)
        * Complex64::from_polar(1.0, a())
}

fn amplitude_damping(gamma: f64) -> Vec<Matrix2<Complex64>> {
    let z = c(0.0, 0.0);
    vec![
        Matrix2::new(c(1.0, 0.0), z, z, c((1.0 - gamma).sqrt(), 0.0)),
        Matrix2::new(z, c(gamma.sqrt(), 0.0), z, z),
    ]
}

fn max_entry_diff(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Indices of the nonzero entries of χ.
fn support(p: &ProcessMatrix) -> Vec<(usize, usize)> {
    (0..4).flat_map(|m| (0..4).map(move |n| (m, n))).filter(|&(m, n)| p.chi()[(m, n)].norm() > 1e-12).collect()
}

#[test]
fn identity_channel_has_single_entry() {
    for basis in BASES {
        let p = reconstruct_chi(|r: &DensityMatrix| Ok(r.clone()), basis).unwrap();
        assert_eq!(support(&p), vec![(0, 0)]);
        assert!((p.chi()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn sigma_x_channel_lives_in_one_entry() {
    let p = reconstruct_chi(kraus_channel(vec![Pauli::X.matrix()]), OperatorBasis::RealPauli).unwrap();
    assert_eq!(support(&p), vec![(1, 1)]);
    assert!((p.chi()[(1, 1)] - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn relaxation_to_ground_matches_kraus_conversion() {
    let want = chi_from_kraus(&relaxation_to_ground_kraus(), OperatorBasis::RealPauli).unwrap();
    let got = reconstruct_chi(kraus_channel(relaxation_to_ground_kraus().to_vec()), OperatorBasis::RealPauli).unwrap();
    assert!(max_entry_diff(got.chi(), want.chi()) < 1e-12);
    // ½(I + σ_z) and ½(σ_x + iσ_y) expansions of |0⟩⟨0| and |0⟩⟨1|.
    let q = c(0.25, 0.0);
    for (m, n) in [(0, 0), (0, 3), (3, 0), (3, 3), (1, 1), (1, 2), (2, 1), (2, 2)] {
        assert!((want.chi()[(m, n)] - q).norm() < 1e-15, "({m}, {n})");
    }
    assert!(want.completeness_residual() < 1e-14);
}

#[test]
fn fidelity_examples() {
    let id = chi_from_kraus(&[Matrix2::identity()], OperatorBasis::RealPauli).unwrap();
    let x = chi_from_kraus(&[Pauli::X.matrix()], OperatorBasis::RealPauli).unwrap();
    assert!((process_fidelity(&id, &id).unwrap() - 1.0).abs() < 1e-10);
    assert!(process_fidelity(&id, &x).unwrap() < 1e-12);
    let relax = chi_from_kraus(&relaxation_to_ground_kraus(), OperatorBasis::RealPauli).unwrap();
    assert!((process_fidelity(&relax, &relax).unwrap() - 1.0).abs() < 1e-10);
    // The same process written in the other basis.
    let relax_p = relax.to_basis(OperatorBasis::Pauli);
    assert!((process_fidelity(&relax, &relax_p).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn fidelity_with_relaxation_for_partial_damping() {
    // Overlap of χ for damping γ with full relaxation: ((1 + √γ)/2)².
    let relax = chi_from_kraus(&relaxation_to_ground_kraus(), OperatorBasis::RealPauli).unwrap();
    for gamma in [0.3, 0.73, 0.99] {
        let ad = chi_from_kraus(&amplitude_damping(gamma), OperatorBasis::RealPauli).unwrap();
        let want = ((1.0 + f64::sqrt(gamma)) / 2.0).powi(2);
        assert!((process_fidelity(&ad, &relax).unwrap() - want).abs() < 1e-10, "γ = {gamma}");
    }
}

#[test]
fn non_linear_channel_is_rejected() {
    let squash = |r: &DensityMatrix| {
        let m = r.matrix() * r.matrix();
        let tr = m.trace();
        DensityMatrix::new(m / tr)
    };
    assert!(matches!(reconstruct_chi(squash, OperatorBasis::RealPauli), Err(Error::ChannelResidual(_))));
}

#[test]
fn trace_decreasing_channel_is_rejected() {
    let lossy = kraus_channel(vec![Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0))]);
    assert!(matches!(reconstruct_chi(lossy, OperatorBasis::RealPauli), Err(Error::InvalidDensityMatrix(_))));
}

fn thermalization_model() -> ChainModel {
    ChainModel::new(
        ChainTopology::new(2).unwrap(),
        CouplingConstants::from_effective(550.0, 980.0).unwrap(),
        SpinConvention::SpinHalf,
    )
}

#[test]
fn thermalization_channel_is_a_valid_process() {
    let model = thermalization_model();
    let cond = InitialCondition::new(LocalState::Ground, LocalState::Ground);
    let bath = Ensemble::from_condition(&cond, model.n_sites(), 1, 0).unwrap();
    let ch = ThermalizationChannel::new(&model, bath, 1e-3, &EvolveOptions::default()).unwrap();
    let p = reconstruct_chi(|r: &DensityMatrix| ch.apply(r), OperatorBasis::RealPauli).unwrap();
    assert!(p.completeness_residual() < 1e-8);
    assert!(p.eigenvalues()[0] > -1e-8);
    assert!((p.trace() - 1.0).abs() < 1e-10);
    // The ground state is a fixed point for a ground-state bath.
    let ground = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    assert!((p.apply(&ground) - ground).norm() < 1e-10);
}

#[test]
fn zero_time_thermalization_is_identity() {
    let model = thermalization_model();
    let bath = Ensemble::from_condition(
        &InitialCondition::new(LocalState::Ground, LocalState::MaximallyMixed),
        model.n_sites(),
        4,
        9,
    )
    .unwrap();
    let ch = ThermalizationChannel::new(&model, bath, 0.0, &EvolveOptions::default()).unwrap();
    let p = reconstruct_chi(|r: &DensityMatrix| ch.apply(r), OperatorBasis::RealPauli).unwrap();
    let id = chi_from_kraus(&[Matrix2::identity()], OperatorBasis::RealPauli).unwrap();
    assert!(max_entry_diff(p.chi(), id.chi()) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unitary_channels_are_rank_one(seed in 0u64..100_000) {
        let u = random_unitary(seed);
        for basis in BASES {
            let p = reconstruct_chi(kraus_channel(vec![u]), basis).unwrap();
            let ev = p.eigenvalues();
            prop_assert!(ev[2] < 1e-8);
            prop_assert!((ev[3] - 1.0).abs() < 1e-10);
            prop_assert!(p.completeness_residual() < 1e-8);
            let want = chi_from_kraus(&[u], basis).unwrap();
            prop_assert!(max_entry_diff(p.chi(), want.chi()) < 1e-10);
        }
    }

    #[test]
    fn basis_change_is_consistent(seed in 0u64..100_000, gamma in 0.0f64..1.0) {
        let u = random_unitary(seed);
        let mut kraus = amplitude_damping(gamma);
        for k in kraus.iter_mut() {
            *k = u * *k;
        }
        let real = reconstruct_chi(kraus_channel(kraus.clone()), OperatorBasis::RealPauli).unwrap();
        let pauli = reconstruct_chi(kraus_channel(kraus.clone()), OperatorBasis::Pauli).unwrap();
        prop_assert!(max_entry_diff(pauli.to_basis(OperatorBasis::RealPauli).chi(), real.chi()) < 1e-10);
        prop_assert!(max_entry_diff(real.to_basis(OperatorBasis::Pauli).chi(), pauli.chi()) < 1e-10);
        let from_kraus = chi_from_kraus(&kraus, OperatorBasis::RealPauli).unwrap();
        prop_assert!(max_entry_diff(real.chi(), from_kraus.chi()) < 1e-10);
        let f = process_fidelity(&real, &chi_from_kraus(&[u], OperatorBasis::RealPauli).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((process_fidelity(&real, &real).unwrap() - 1.0).abs() < 1e-10);
    }
}
