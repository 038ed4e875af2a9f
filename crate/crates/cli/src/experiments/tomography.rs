use nalgebra::Matrix2;
use num_complex::Complex64;
use serde_json::json;
use spinforge::tomography::{chi_from_kraus, relaxation_to_ground_kraus, ThermalizationChannel};
use spinforge::{
    process_fidelity, reconstruct_chi, DensityMatrix, EvolveOptions, LocalState, OperatorBasis, Pauli, ProcessMatrix,
};

use super::{model, state_name, Check, Comparison, Report};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::output::Table;

pub const COMPLETENESS_TOLERANCE: f64 = 1e-8;
pub const SELF_FIDELITY_TOLERANCE: f64 = 1e-10;

/// Kraus operators of complete thermalization into the bath's local state.
pub fn relaxation_target(bath: LocalState) -> Vec<Matrix2<Complex64>> {
    match bath {
        LocalState::Ground => relaxation_to_ground_kraus().to_vec(),
        LocalState::Excited => {
            let x = Pauli::X.matrix();
            relaxation_to_ground_kraus().iter().map(|k| x * k * x).collect()
        }
        LocalState::MaximallyMixed => std::iter::once(Matrix2::identity())
            .chain(Pauli::ALL.iter().map(|p| p.matrix()))
            .map(|k| k * Complex64::new(0.5, 0.0))
            .collect(),
    }
}

#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub total_hydrogens: usize,
    pub time: f64,
    pub bath: LocalState,
    pub chi: ProcessMatrix,
    pub target: ProcessMatrix,
    pub fidelity: f64,
    pub self_fidelity: f64,
    pub min_fidelity: f64,
}

pub fn run_tomography(config: &ExperimentConfig) -> Result<TomographyResult, CliError> {
    let tc = &config.tomography;
    let topo = config.topology();
    let m = model(config, topo);
    let bath = spinforge::Ensemble::from_condition(
        &spinforge::InitialCondition::new(LocalState::Ground, tc.bath),
        m.n_sites(),
        tc.ensemble_samples,
        config.seed,
    )?;
    let opts = EvolveOptions { method: config.run.method, ..EvolveOptions::default() };
    log::info!("tomography: {} sites, {} s channel", m.n_sites(), tc.time);
    let channel = ThermalizationChannel::new(&m, bath, tc.time, &opts)?;
    let chi = reconstruct_chi(|rho: &DensityMatrix| channel.apply(rho), tc.basis)?;
    let target = chi_from_kraus(&relaxation_target(tc.bath), tc.basis)?;
    Ok(TomographyResult {
        total_hydrogens: topo.n_hydrogens(),
        time: tc.time,
        bath: tc.bath,
        fidelity: process_fidelity(&chi, &target)?,
        self_fidelity: process_fidelity(&chi, &chi)?,
        chi,
        target,
        min_fidelity: tc.min_fidelity,
    })
}

fn basis_name(b: OperatorBasis) -> &'static str {
    match b {
        OperatorBasis::RealPauli => "real-pauli",
        OperatorBasis::Pauli => "pauli",
    }
}

fn chi_table(name: &str, p: &ProcessMatrix) -> Table {
    let mut t = Table::new(name, vec!["m", "n", "re", "im"]);
    for m in 0..4 {
        for n in 0..4 {
            let z = p.chi()[(m, n)];
            t.rows.push(vec![m as f64, n as f64, z.re, z.im]);
        }
    }
    t
}

impl TomographyResult {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::above("fidelity with complete thermalization", self.fidelity, self.min_fidelity),
            Check::below("completeness residual", self.chi.completeness_residual(), COMPLETENESS_TOLERANCE),
            Check::new(
                "|F(χ, χ) − 1|",
                (self.self_fidelity - 1.0).abs(),
                Comparison::AtMost,
                SELF_FIDELITY_TOLERANCE,
            ),
        ]
    }

    pub fn into_report(self) -> Report {
        let checks = self.checks();
        let excited = Matrix2::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        );
        Report {
            experiment: ExperimentKind::Tomography,
            tables: vec![chi_table("chi", &self.chi), chi_table("chi_target", &self.target)],
            summary: json!({
                "total_hydrogens": self.total_hydrogens,
                "time_s": self.time,
                "bath": state_name(self.bath),
                "basis": basis_name(self.chi.basis()),
                "chi": self.chi.to_rows(),
                "chi_target": self.target.to_rows(),
                "chi_eigenvalues": self.chi.eigenvalues(),
                "chi_trace": self.chi.trace(),
                "completeness_residual": self.chi.completeness_residual(),
                "fidelity": self.fidelity,
                "self_fidelity": self.self_fidelity,
                "excited_population_from_excited_input": self.chi.apply(&excited)[(1, 1)].re,
            }),
            checks,
        }
    }
}
