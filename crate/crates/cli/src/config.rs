//! Experiment configuration files.
//!
//! Configs are TOML. Every dimensional field carries its unit in the name
//! (`delta_t_us`, `j_ch_eff_rad_s`, `beta_per_joule`, ...). Parsing goes
//! through a raw serde layer and then [`ExperimentConfig::validate`], which
//! reports the offending field by its dotted path.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spinforge::dynamics::{DEFAULT_EFFECTIVE_POINTS, DEFAULT_ENSEMBLE_SAMPLES};
use spinforge::model::DEFAULT_OMEGA1;
use spinforge::{ChainTopology, CouplingConstants, LocalState, MachineUnitary, Method, OperatorBasis, SpinConvention};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fig2,
    Fig3,
    Fig4,
    Machine,
    Tomography,
    AhtCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Fig2,
        ExperimentKind::Fig3,
        ExperimentKind::Fig4,
        ExperimentKind::Machine,
        ExperimentKind::Tomography,
        ExperimentKind::AhtCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Machine => "machine",
            ExperimentKind::Tomography => "tomography",
            ExperimentKind::AhtCheck => "aht-check",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "pulsed vs effective carbon magnetization for several pulse spacings",
            ExperimentKind::Fig3 => "carbon thermalization and carbon-hydrogen EoF versus bath size",
            ExperimentKind::Fig4 => "thermalization against baths at positive, negative and infinite temperature",
            ExperimentKind::Machine => "single-reservoir thermal machine, analytic or chain-simulated",
            ExperimentKind::Tomography => "process matrix of the engineered thermalization channel",
            ExperimentKind::AhtCheck => "zeroth-order average Hamiltonian against the exchange form",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
enum ConventionName {
    #[default]
    SpinHalf,
    Pauli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StateName {
    Ground,
    Excited,
    MaximallyMixed,
}

impl From<StateName> for LocalState {
    fn from(s: StateName) -> Self {
        match s {
            StateName::Ground => LocalState::Ground,
            StateName::Excited => LocalState::Excited,
            StateName::MaximallyMixed => LocalState::MaximallyMixed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
enum MethodName {
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// Time axis on which pulsed and effective trajectories are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TimeAxis {
    /// Pulsed sample `k` against the effective evolution for `k·4Δt`; the
    /// pulsed run covers `t_total` of free evolution.
    #[default]
    Effective,
    /// Both sampled at the same wall-clock time; the pulsed run covers
    /// `t_total` of wall-clock time.
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MachineMode {
    Analytic,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
enum BasisName {
    #[default]
    RealPauli,
    Pauli,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    total_hydrogens: Option<OneOrMany<usize>>,
    n_per_chain: Option<OneOrMany<usize>>,
    j_ch_eff_rad_s: Option<f64>,
    j_hh_eff_rad_s: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCycle {
    delta_t_us: Option<OneOrMany<f64>>,
    tau_p_us: Option<f64>,
    time_axis: Option<TimeAxis>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    t_total_ms: Option<f64>,
    n_points: Option<usize>,
    carbon: Option<StateName>,
    bath: Option<StateName>,
    ensemble_samples: Option<usize>,
    method: Option<MethodName>,
    track_eof: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    carbon: StateName,
    bath: StateName,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMachine {
    mode: MachineMode,
    beta_per_joule: Option<f64>,
    omega1_rad_s: Option<f64>,
    unitaries: Option<Vec<String>>,
    cycles_per_stroke: Option<usize>,
    closed_form_draws: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTomography {
    time_ms: Option<f64>,
    basis: Option<BasisName>,
    bath: Option<StateName>,
    ensemble_samples: Option<usize>,
    min_fidelity: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAht {
    n_per_chain: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    convention: ConventionName,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    system: RawSystem,
    #[serde(default)]
    cycle: RawCycle,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    scenarios: Vec<RawScenario>,
    machine: Option<RawMachine>,
    #[serde(default)]
    tomography: RawTomography,
    #[serde(default)]
    aht: RawAht,
}

/// Chain size and couplings shared by all chain experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub topologies: Vec<ChainTopology>,
    pub couplings: CouplingConstants,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleConfig {
    /// Free-evolution spacings in seconds.
    pub delta_t: Vec<f64>,
    pub tau_p: f64,
    pub time_axis: TimeAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Seconds.
    pub t_total: f64,
    pub n_points: usize,
    pub carbon: LocalState,
    pub bath: LocalState,
    pub ensemble_samples: usize,
    pub method: Method,
    pub track_eof: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub carbon: LocalState,
    pub bath: LocalState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MachineConfig {
    pub mode: MachineMode,
    pub beta: f64,
    pub omega1: f64,
    pub unitaries: Vec<MachineUnitary>,
    pub cycles_per_stroke: usize,
    pub closed_form_draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyConfig {
    /// Seconds.
    pub time: f64,
    pub basis: OperatorBasis,
    pub bath: LocalState,
    pub ensemble_samples: usize,
    pub min_fidelity: f64,
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub convention: SpinConvention,
    pub output_dir: Option<PathBuf>,
    pub system: SystemConfig,
    pub cycle: CycleConfig,
    pub run: RunConfig,
    pub scenarios: Vec<Scenario>,
    pub machine: Option<MachineConfig>,
    pub tomography: TomographyConfig,
    pub aht_sizes: Vec<usize>,
}

fn field_error(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: message.into() }
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_error(field, format!("must be a positive finite number, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field_error(field, format!("must be finite, got {v}")))
    }
}

fn count(field: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(field_error(field, format!("must be at least {min}, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Self::validate(raw)
    }

    fn validate(raw: RawConfig) -> Result<Self, CliError> {
        let kind = raw.experiment;
        let convention = match raw.convention {
            ConventionName::SpinHalf => SpinConvention::SpinHalf,
            ConventionName::Pauli => SpinConvention::Pauli,
        };

        let topologies = match (&raw.system.total_hydrogens, &raw.system.n_per_chain) {
            (Some(_), Some(_)) => {
                return Err(field_error("system.n_per_chain", "give either total_hydrogens or n_per_chain, not both"))
            }
            (Some(t), None) => t
                .to_vec()
                .into_iter()
                .map(|n| {
                    ChainTopology::with_total_hydrogens(n)
                        .map_err(|e| field_error("system.total_hydrogens", e.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(n)) => n
                .to_vec()
                .into_iter()
                .map(|n| ChainTopology::new(n).map_err(|e| field_error("system.n_per_chain", e.to_string())))
                .collect::<Result<Vec<_>, _>>()?,
            (None, None) => vec![ChainTopology::new(3).expect("valid default")],
        };
        if topologies.is_empty() {
            return Err(field_error("system.total_hydrogens", "needs at least one size"));
        }
        if topologies.len() > 1 && kind != ExperimentKind::Fig3 {
            return Err(field_error("system.total_hydrogens", format!("{} takes a single size", kind.name())));
        }
        let j_ch = finite("system.j_ch_eff_rad_s", raw.system.j_ch_eff_rad_s.unwrap_or(550.0))?;
        let j_hh = finite("system.j_hh_eff_rad_s", raw.system.j_hh_eff_rad_s.unwrap_or(980.0))?;
        let couplings = CouplingConstants::from_effective(j_ch, j_hh)
            .map_err(|e| field_error("system.j_ch_eff_rad_s", e.to_string()))?;

        let delta_t = raw
            .cycle
            .delta_t_us
            .map(|d| d.to_vec())
            .unwrap_or_else(|| vec![1.228])
            .into_iter()
            .enumerate()
            .map(|(i, v)| positive(&format!("cycle.delta_t_us[{i}]"), v).map(|v| v * 1e-6))
            .collect::<Result<Vec<_>, _>>()?;
        if delta_t.is_empty() {
            return Err(field_error("cycle.delta_t_us", "needs at least one value"));
        }
        if delta_t.len() > 1 && kind != ExperimentKind::Fig2 {
            return Err(field_error("cycle.delta_t_us", format!("{} takes a single value", kind.name())));
        }
        let tau_p = raw.cycle.tau_p_us.unwrap_or(9.89);
        if !(tau_p.is_finite() && tau_p >= 0.0) {
            return Err(field_error("cycle.tau_p_us", format!("must be ≥ 0, got {tau_p}")));
        }
        let cycle = CycleConfig { delta_t, tau_p: tau_p * 1e-6, time_axis: raw.cycle.time_axis.unwrap_or_default() };

        let method = match raw.run.method.unwrap_or_default() {
            MethodName::Auto => Method::Auto,
            MethodName::Dense => Method::Dense,
            MethodName::Krylov => Method::Krylov,
        };
        let run = RunConfig {
            t_total: positive("run.t_total_ms", raw.run.t_total_ms.unwrap_or(10.0))? * 1e-3,
            n_points: count("run.n_points", raw.run.n_points.unwrap_or(DEFAULT_EFFECTIVE_POINTS), 2)?,
            carbon: raw.run.carbon.unwrap_or(StateName::Excited).into(),
            bath: raw.run.bath.unwrap_or(StateName::Ground).into(),
            ensemble_samples: count(
                "run.ensemble_samples",
                raw.run.ensemble_samples.unwrap_or(DEFAULT_ENSEMBLE_SAMPLES),
                1,
            )?,
            method,
            track_eof: raw.run.track_eof.unwrap_or(kind == ExperimentKind::Fig3),
        };

        let scenarios: Vec<Scenario> = raw
            .scenarios
            .into_iter()
            .map(|s| Scenario { name: s.name, carbon: s.carbon.into(), bath: s.bath.into() })
            .collect();
        if kind == ExperimentKind::Fig4 && scenarios.is_empty() {
            return Err(field_error("scenarios", "fig4 needs at least one [[scenarios]] entry"));
        }
        for (i, s) in scenarios.iter().enumerate() {
            if s.name.is_empty() || s.name.contains(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-')) {
                return Err(field_error(&format!("scenarios[{i}].name"), "use letters, digits, '-' or '_'"));
            }
        }

        let machine = match raw.machine {
            None if kind == ExperimentKind::Machine => {
                return Err(field_error("machine", "the machine experiment needs a [machine] section"))
            }
            None => None,
            Some(m) => Some(Self::validate_machine(m)?),
        };

        let t = raw.tomography;
        let tomography = TomographyConfig {
            time: {
                let v = t.time_ms.unwrap_or(10.0);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(field_error("tomography.time_ms", format!("must be ≥ 0, got {v}")));
                }
                v * 1e-3
            },
            basis: match t.basis.unwrap_or_default() {
                BasisName::RealPauli => OperatorBasis::RealPauli,
                BasisName::Pauli => OperatorBasis::Pauli,
            },
            bath: t.bath.unwrap_or(StateName::Ground).into(),
            ensemble_samples: count(
                "tomography.ensemble_samples",
                t.ensemble_samples.unwrap_or(DEFAULT_ENSEMBLE_SAMPLES),
                1,
            )?,
            min_fidelity: {
                let v = t.min_fidelity.unwrap_or(0.98);
                if !(0.0..=1.0).contains(&v) {
                    return Err(field_error("tomography.min_fidelity", format!("must lie in [0, 1], got {v}")));
                }
                v
            },
        };

        let aht_sizes = raw.aht.n_per_chain.unwrap_or_else(|| vec![1, 2, 3]);
        for (i, &n) in aht_sizes.iter().enumerate() {
            count(&format!("aht.n_per_chain[{i}]"), n, 1)?;
        }

        Ok(Self {
            experiment: kind,
            seed: raw.seed,
            convention,
            output_dir: raw.output_dir,
            system: SystemConfig { topologies, couplings },
            cycle,
            run,
            scenarios,
            machine,
            tomography,
            aht_sizes,
        })
    }

    fn validate_machine(m: RawMachine) -> Result<MachineConfig, CliError> {
        let omega1 = positive("machine.omega1_rad_s", m.omega1_rad_s.unwrap_or(DEFAULT_OMEGA1))?;
        let beta = match (m.mode, m.beta_per_joule) {
            (MachineMode::Analytic, None) => return Err(field_error("machine.beta_per_joule", "required in analytic mode")),
            (_, Some(b)) => finite("machine.beta_per_joule", b)?,
            (MachineMode::Simulated, None) => 0.0,
        };
        let names = m.unitaries.unwrap_or_else(|| MachineUnitary::ALL.iter().map(|u| u.name().to_string()).collect());
        if names.is_empty() {
            return Err(field_error("machine.unitaries", "needs at least one unitary"));
        }
        let unitaries = names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                MachineUnitary::from_name(n).ok_or_else(|| {
                    field_error(&format!("machine.unitaries[{i}]"), format!("unknown unitary {n:?}; use Ux, Uy, Upi or UI"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MachineConfig {
            mode: m.mode,
            beta,
            omega1,
            unitaries,
            cycles_per_stroke: count("machine.cycles_per_stroke", m.cycles_per_stroke.unwrap_or(2036), 1)?,
            closed_form_draws: m.closed_form_draws.unwrap_or(100),
        })
    }

    /// The only chain size of single-size experiments.
    pub fn topology(&self) -> ChainTopology {
        self.system.topologies[0]
    }
}
