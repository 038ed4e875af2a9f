use std::collections::HashMap;

use num_complex::Complex64;
use serde_json::json;
use spinforge::{average_hamiltonian_zeroth, ChainTopology, OperatorSum, PulseCycle};

use super::{model, Check, Report};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;

pub const AHT_TOLERANCE: f64 = 1e-14;

/// Largest coefficient of `a − b` after merging equal Pauli strings.
pub fn coefficient_residual(a: &OperatorSum, b: &OperatorSum) -> Result<f64, CliError> {
    let diff = a.add(&b.scaled(Complex64::new(-1.0, 0.0)))?;
    let mut merged: HashMap<(u64, u64), Complex64> = HashMap::new();
    for t in diff.terms() {
        *merged.entry((t.x_mask(), t.z_mask())).or_default() += t.coeff();
    }
    Ok(merged.values().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Residual (rad/s) between the cycle-averaged natural Hamiltonian and the
/// exchange form.
pub fn aht_residual(config: &ExperimentConfig, n_per_chain: usize) -> Result<f64, CliError> {
    let m = model(config, ChainTopology::new(n_per_chain)?);
    let cycle = PulseCycle::four_pulse(config.cycle.delta_t[0], config.cycle.tau_p)?;
    let hbar = average_hamiltonian_zeroth(&m.natural_hamiltonian()?, &cycle)?;
    coefficient_residual(&hbar, &m.effective_hamiltonian()?)
}

pub fn run_aht(config: &ExperimentConfig) -> Result<Report, CliError> {
    let mut checks = Vec::new();
    let mut sizes = Vec::new();
    for &n in &config.aht_sizes {
        let r = aht_residual(config, n)?;
        checks.push(Check::below(format!("averaged Hamiltonian residual, {n} per chain"), r, AHT_TOLERANCE));
        sizes.push(json!({ "n_per_chain": n, "residual_rad_s": r }));
    }
    Ok(Report {
        experiment: ExperimentKind::AhtCheck,
        tables: Vec::new(),
        summary: json!({ "delta_t_us": config.cycle.delta_t[0] * 1e6, "sizes": sizes }),
        checks,
    })
}
