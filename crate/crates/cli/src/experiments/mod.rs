//! Named experiments. Each returns a [`Report`] holding its tables, a JSON
//! summary and the invariant checks that decide the exit code.

mod aht;
mod fig2;
mod fig3;
mod fig4;
mod machine;
mod tomography;

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use spinforge::{
    ChainModel, ChainTopology, Ensemble, EvolveOptions, InitialCondition, LocalState, RunOptions, SpinConvention,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::output::{self, Table};

pub use aht::{aht_residual, run_aht};
pub use fig2::{cycles_for_wall_time, run_fig2, Fig2Result};
pub use fig3::{run_fig3, Fig3Result};
pub use fig4::{run_fig4, Fig4Result};
pub use machine::{run_machine_analytic_experiment, run_machine_simulated, MachineSimResult};
pub use tomography::{relaxation_target, run_tomography, TomographyResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One invariant check with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::Below => value < threshold,
            Comparison::AtMost => value <= threshold,
            Comparison::Above => value > threshold,
            Comparison::AtLeast => value >= threshold,
        };
        Self { name: name.into(), passed, value, comparison, threshold }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::Below, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Comparison::Above, threshold)
    }

    /// Boolean property recorded as 1/0 against a threshold of 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Comparison::AtLeast, 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub tables: Vec<Table>,
    pub summary: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self, config: &ExperimentConfig) -> Value {
        json!({
            "experiment": self.experiment.name(),
            "seed": config.seed,
            "convention": convention_name(config.convention),
            "passed": self.passed(),
            "summary": self.summary,
            "checks": self.checks,
        })
    }

    /// Writes every table as CSV plus `summary.json`; returns the paths written.
    pub fn write(&self, config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        output::ensure_dir(dir)?;
        let mut paths = Vec::with_capacity(self.tables.len() + 1);
        for t in &self.tables {
            paths.push(output::write_csv(dir, t)?);
        }
        let summary = dir.join("summary.json");
        output::write_json(&summary, &self.to_json(config))?;
        paths.push(summary);
        Ok(paths)
    }
}

pub fn convention_name(c: SpinConvention) -> &'static str {
    match c {
        SpinConvention::SpinHalf => "spin-half",
        SpinConvention::Pauli => "pauli",
    }
}

pub fn state_name(s: LocalState) -> &'static str {
    match s {
        LocalState::Ground => "ground",
        LocalState::Excited => "excited",
        LocalState::MaximallyMixed => "maximally-mixed",
    }
}

/// Long-time carbon `⟨σ_z⟩` expected from a bath in `s`.
pub fn bath_target(s: LocalState) -> f64 {
    match s {
        LocalState::Ground => 1.0,
        LocalState::Excited => -1.0,
        LocalState::MaximallyMixed => 0.0,
    }
}

pub(crate) fn model(config: &ExperimentConfig, topology: ChainTopology) -> ChainModel {
    ChainModel::new(topology, config.system.couplings, config.convention)
}

pub(crate) fn run_options(config: &ExperimentConfig, track_eof: bool) -> RunOptions {
    RunOptions { evolve: EvolveOptions { method: config.run.method, ..EvolveOptions::default() }, track_eof }
}

pub(crate) fn ensemble(
    config: &ExperimentConfig,
    n_sites: usize,
    carbon: LocalState,
    bath: LocalState,
) -> Result<Ensemble, CliError> {
    Ok(Ensemble::from_condition(
        &InitialCondition::new(carbon, bath),
        n_sites,
        config.run.ensemble_samples,
        config.seed,
    )?)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    match config.experiment {
        ExperimentKind::Fig2 => run_fig2(config).map(Fig2Result::into_report),
        ExperimentKind::Fig3 => run_fig3(config).map(Fig3Result::into_report),
        ExperimentKind::Fig4 => run_fig4(config).map(Fig4Result::into_report),
        ExperimentKind::Machine => machine::run_machine(config),
        ExperimentKind::Tomography => run_tomography(config).map(TomographyResult::into_report),
        ExperimentKind::AhtCheck => run_aht(config),
    }
}
