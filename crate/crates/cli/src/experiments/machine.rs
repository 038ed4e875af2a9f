use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use spinforge::model::build_zeeman;
use spinforge::pulse::rotation;
use spinforge::thermo::{
    closed_form_work, run_machine_analytic, thermal_state, transition_probability, work_and_heat, MachineRun,
    SimulatedMachine, StrokeTrace,
};
use spinforge::{
    EvolveOptions, InverseTemperature, MachineRecord, MachineUnitary, Pauli, PulseCycle, SpinConvention,
    Trajectory, ZeemanParams,
};

use super::{model, Check, Comparison, Report};
use crate::config::{ExperimentConfig, ExperimentKind, MachineConfig, MachineMode};
use crate::error::CliError;
use crate::output::Table;

/// Relative (to the gap) tolerance of the closed-form work and of `η = 1`.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const TAIL_FRACTION: f64 = 0.2;
pub const THERMALIZED_PE_MIN: f64 = 0.5;
/// Allowed relative deviation of the `U_π / U_x` drop ratio from 2.
pub const DROP_RATIO_TOLERANCE: f64 = 0.25;
pub const IDENTITY_DROP_MAX: f64 = 0.02;
/// Fraction of the drop that the second stroke must win back.
pub const RECOVERY_MIN: f64 = 0.5;

fn machine_config(config: &ExperimentConfig) -> Result<&MachineConfig, CliError> {
    config.machine.as_ref().ok_or_else(|| CliError::Config {
        field: "machine".into(),
        message: "the machine experiment needs a [machine] section".into(),
    })
}

pub(super) fn run_machine(config: &ExperimentConfig) -> Result<Report, CliError> {
    match machine_config(config)?.mode {
        MachineMode::Analytic => run_machine_analytic_experiment(config),
        MachineMode::Simulated => run_machine_simulated(config).map(MachineSimResult::into_report),
    }
}

fn record_json(r: &MachineRecord) -> Value {
    json!({ "xi": r.xi, "work_j": r.work, "heat_j": r.heat, "efficiency": r.efficiency })
}

fn random_unitary(rng: &mut impl Rng) -> Matrix2<Complex64> {
    let mut angle = || rng.random::<f64>() * std::f64::consts::TAU;
    let (a, b, c, phase) = (angle(), angle(), angle(), angle());
    rotation(Pauli::Z, a, SpinConvention::SpinHalf)
        * rotation(Pauli::Y, b, SpinConvention::SpinHalf)
        * rotation(Pauli::Z, c, SpinConvention::SpinHalf)
        * Complex64::from_polar(1.0, phase)
}

/// Random negative-temperature draws compared with the closed form; returns
/// the draw table and the largest work and efficiency errors.
fn closed_form_draws(n: usize, seed: u64, conv: SpinConvention) -> Result<(Table, f64, f64), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(
        "machine_draws",
        vec!["omega1_rad_s", "beta_per_joule", "xi", "work_trace_j", "work_closed_form_j"],
    );
    let (mut work_err, mut eta_err) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let z = ZeemanParams::new(rng.random_range(1e6..1e10))?;
        let gap = z.quantum() * conv.scale();
        let beta = InverseTemperature::new(-rng.random_range(0.01..6.0) / gap)?;
        let u = random_unitary(&mut rng);
        let h1 = build_zeeman(&z, conv)?;
        let rec = work_and_heat(&thermal_state(&h1, beta)?, &u, &h1)?;
        let xi = transition_probability(&u)?;
        let want = closed_form_work(beta, gap, xi);
        work_err = work_err.max((rec.work - want).abs() / gap);
        if xi > IDENTITY_TOLERANCE {
            eta_err = eta_err.max(rec.efficiency.map_or(f64::INFINITY, |e| (e - 1.0).abs()));
        }
        table.rows.push(vec![z.omega1, beta.beta(), xi, rec.work, want]);
    }
    Ok((table, work_err, eta_err))
}

pub fn named_xi_residual() -> Result<f64, CliError> {
    let want = |u: MachineUnitary| match u {
        MachineUnitary::Ux | MachineUnitary::Uy => 0.5,
        MachineUnitary::Upi => 1.0,
        MachineUnitary::UI => 0.0,
    };
    let mut worst = 0.0f64;
    for u in MachineUnitary::ALL {
        worst = worst.max((transition_probability(&u.matrix())? - want(u)).abs());
    }
    Ok(worst)
}

pub fn run_machine_analytic_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    let mc = machine_config(config)?;
    let z = ZeemanParams::new(mc.omega1)?;
    let beta = InverseTemperature::new(mc.beta)?;
    let gap = z.quantum() * config.convention.scale();
    let mut checks = Vec::new();
    let mut results = Vec::new();
    for &u in &mc.unitaries {
        let (rec, pops) = run_machine_analytic(beta, &z, u, config.convention)?;
        let closed = closed_form_work(beta, gap, rec.xi);
        checks.push(Check::new(
            format!("{}: trace work against closed form, relative to the gap", u.name()),
            (rec.work - closed).abs() / gap,
            Comparison::AtMost,
            IDENTITY_TOLERANCE,
        ));
        if let Some(eta) = rec.efficiency {
            checks.push(Check::new(format!("{}: |η − 1|", u.name()), (eta - 1.0).abs(), Comparison::AtMost, IDENTITY_TOLERANCE));
        }
        let mut entry = record_json(&rec);
        entry["unitary"] = json!(u.name());
        entry["work_closed_form_j"] = json!(closed);
        entry["excited_population"] = json!({
            "ground": pops.ground,
            "thermal": pops.thermal,
            "after_unitary": pops.after_unitary,
            "rethermalized": pops.rethermalized,
        });
        results.push(entry);
    }
    let mut tables = Vec::new();
    if mc.closed_form_draws > 0 {
        let (table, work_err, eta_err) = closed_form_draws(mc.closed_form_draws, config.seed, config.convention)?;
        checks.push(Check::new("random draws: work against closed form", work_err, Comparison::AtMost, IDENTITY_TOLERANCE));
        checks.push(Check::new("random draws: |η − 1|", eta_err, Comparison::AtMost, IDENTITY_TOLERANCE));
        tables.push(table);
    }
    checks.push(Check::new("ξ of the named unitaries", named_xi_residual()?, Comparison::AtMost, IDENTITY_TOLERANCE));
    Ok(Report {
        experiment: ExperimentKind::Machine,
        tables,
        summary: json!({
            "mode": "analytic",
            "beta_per_joule": mc.beta,
            "omega1_rad_s": mc.omega1,
            "gap_j": gap,
            "closed_form_draws": mc.closed_form_draws,
            "unitaries": results,
        }),
        checks,
    })
}

#[derive(Debug, Clone)]
pub struct MachineSimResult {
    pub total_hydrogens: usize,
    pub cycles_per_stroke: usize,
    pub runs: Vec<MachineRun>,
}

fn tail_pe(trace: &StrokeTrace) -> f64 {
    Trajectory::tail_mean(&trace.pe, TAIL_FRACTION)
}

pub fn run_machine_simulated(config: &ExperimentConfig) -> Result<MachineSimResult, CliError> {
    let mc = machine_config(config)?;
    let topo = config.topology();
    let m = model(config, topo);
    let cycle = PulseCycle::four_pulse(config.cycle.delta_t[0], config.cycle.tau_p)?;
    let opts = EvolveOptions { method: config.run.method, ..EvolveOptions::default() };
    let machine = SimulatedMachine::new(&m, cycle, mc.cycles_per_stroke, ZeemanParams::new(mc.omega1)?, &opts)?;
    log::info!("machine: first stroke, {} sites, {} cycles", m.n_sites(), mc.cycles_per_stroke);
    let first = machine.thermalize()?;
    let mut runs = Vec::new();
    for &u in &mc.unitaries {
        log::info!("machine: unitary {} and second stroke", u.name());
        runs.push(machine.complete(&first, u)?);
    }
    Ok(MachineSimResult { total_hydrogens: topo.n_hydrogens(), cycles_per_stroke: mc.cycles_per_stroke, runs })
}

impl MachineSimResult {
    pub fn run(&self, u: MachineUnitary) -> Option<&MachineRun> {
        self.runs.iter().find(|r| r.unitary == u)
    }

    pub fn drop_ratio(&self) -> Option<f64> {
        Some(self.run(MachineUnitary::Upi)?.drop() / self.run(MachineUnitary::Ux)?.drop())
    }

    pub fn recovery(run: &MachineRun) -> f64 {
        (tail_pe(&run.rethermalize) - run.pe_after_unitary) / run.drop()
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        if let Some(r) = self.runs.first() {
            checks.push(Check::above("thermalized excited population", tail_pe(&r.thermalize), THERMALIZED_PE_MIN));
        }
        if let Some(ratio) = self.drop_ratio() {
            checks.push(Check::new(
                "Upi / Ux drop ratio, relative deviation from 2",
                (ratio / 2.0 - 1.0).abs(),
                Comparison::AtMost,
                DROP_RATIO_TOLERANCE,
            ));
        }
        if let Some(r) = self.run(MachineUnitary::UI) {
            checks.push(Check::new("UI drop", r.drop().abs(), Comparison::AtMost, IDENTITY_DROP_MAX));
        }
        for r in self.runs.iter().filter(|r| r.record.xi > 1e-12) {
            checks.push(Check::new(
                format!("{}: recovered fraction of the drop", r.unitary.name()),
                Self::recovery(r),
                Comparison::AtLeast,
                RECOVERY_MIN,
            ));
        }
        checks
    }

    pub fn into_report(self) -> Report {
        let checks = self.checks();
        let tables = self
            .runs
            .iter()
            .map(|r| {
                let offset = r.thermalize.times.last().copied().unwrap_or(0.0);
                let mut times = r.thermalize.times.clone();
                times.extend(r.rethermalize.times.iter().map(|t| t + offset));
                let mut pe = r.thermalize.pe.clone();
                pe.extend_from_slice(&r.rethermalize.pe);
                Table::from_columns(format!("machine_{}", r.unitary.name()), vec![("time_s", &times[..]), ("pe", &pe[..])])
            })
            .collect();
        let runs: Vec<_> = self
            .runs
            .iter()
            .map(|r| {
                let mut entry = record_json(&r.record);
                entry["unitary"] = json!(r.unitary.name());
                entry["thermalized_pe"] = json!(r.thermalize.pe.last());
                entry["tail_mean_pe_first_stroke"] = json!(tail_pe(&r.thermalize));
                entry["pe_after_unitary"] = json!(r.pe_after_unitary);
                entry["drop"] = json!(r.drop());
                entry["tail_mean_pe_second_stroke"] = json!(tail_pe(&r.rethermalize));
                entry["heat_first_stroke_j"] = json!(r.heat_first_stroke);
                entry
            })
            .collect();
        Report {
            experiment: ExperimentKind::Machine,
            tables,
            summary: json!({
                "mode": "simulated",
                "total_hydrogens": self.total_hydrogens,
                "cycles_per_stroke": self.cycles_per_stroke,
                "drop_ratio_upi_over_ux": self.drop_ratio(),
                "unitaries": runs,
            }),
            checks,
        }
    }
}
