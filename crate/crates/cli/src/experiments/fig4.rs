use serde_json::json;
use spinforge::{run_effective, LocalState, Trajectory};

use super::{bath_target, ensemble, model, run_options, state_name, Check, Comparison, Report};
use crate::config::{ExperimentConfig, ExperimentKind, Scenario};
use crate::error::CliError;
use crate::output::Table;

pub const TAIL_FRACTION: f64 = 0.2;
/// Allowed distance of the tail magnetization from the bath value.
pub const TARGET_TOLERANCE: f64 = 0.15;
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Fig4Result {
    pub total_hydrogens: usize,
    pub runs: Vec<(Scenario, Trajectory)>,
}

pub fn run_fig4(config: &ExperimentConfig) -> Result<Fig4Result, CliError> {
    let topo = config.topology();
    let m = model(config, topo);
    let mut runs = Vec::new();
    for s in &config.scenarios {
        log::info!("fig4: scenario {} ({} sites)", s.name, m.n_sites());
        let ens = ensemble(config, m.n_sites(), s.carbon, s.bath)?;
        let traj = run_effective(&m, &ens, config.run.t_total, config.run.n_points, &run_options(config, false))?;
        runs.push((s.clone(), traj));
    }
    Ok(Fig4Result { total_hydrogens: topo.n_hydrogens(), runs })
}

fn flipped(s: LocalState) -> Option<LocalState> {
    match s {
        LocalState::Ground => Some(LocalState::Excited),
        LocalState::Excited => Some(LocalState::Ground),
        LocalState::MaximallyMixed => None,
    }
}

impl Fig4Result {
    /// Largest `|M_z^a + M_z^b|` over scenario pairs related by a global spin flip.
    pub fn symmetry_residuals(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::new();
        for (i, (a, ta)) in self.runs.iter().enumerate() {
            for (b, tb) in &self.runs[i + 1..] {
                if flipped(a.carbon) == Some(b.carbon) && flipped(a.bath) == Some(b.bath) {
                    let r = ta.mz.iter().zip(&tb.mz).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
                    out.push((a.name.clone(), b.name.clone(), r));
                }
            }
        }
        out
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .runs
            .iter()
            .map(|(s, t)| {
                Check::new(
                    format!("{}: distance of tail magnetization from bath value", s.name),
                    (t.tail_mean_mz(TAIL_FRACTION) - bath_target(s.bath)).abs(),
                    Comparison::AtMost,
                    TARGET_TOLERANCE,
                )
            })
            .collect();
        for (a, b, r) in self.symmetry_residuals() {
            checks.push(Check::below(format!("spin-flip symmetry {a} / {b}"), r, SYMMETRY_TOLERANCE));
        }
        checks
    }

    pub fn into_report(self) -> Report {
        let checks = self.checks();
        let tables = self
            .runs
            .iter()
            .map(|(s, t)| Table::from_columns(format!("fig4_{}", s.name), vec![("time_s", &t.times[..]), ("mz", &t.mz[..])]))
            .collect();
        let runs: Vec<_> = self
            .runs
            .iter()
            .map(|(s, t)| {
                json!({
                    "name": s.name,
                    "carbon": state_name(s.carbon),
                    "bath": state_name(s.bath),
                    "bath_mz": bath_target(s.bath),
                    "tail_mean_mz": t.tail_mean_mz(TAIL_FRACTION),
                })
            })
            .collect();
        Report {
            experiment: ExperimentKind::Fig4,
            tables,
            summary: json!({ "total_hydrogens": self.total_hydrogens, "tail_fraction": TAIL_FRACTION, "runs": runs }),
            checks,
        }
    }
}
