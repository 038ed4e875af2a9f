use serde_json::json;
use spinforge::{run_effective, run_pulsed, PulseCycle, Trajectory};

use super::{ensemble, model, run_options, Check, Report};
use crate::config::{ExperimentConfig, ExperimentKind, TimeAxis};
use crate::error::CliError;
use crate::output::Table;

/// Bound on the finest-spacing deviation, measured on a dense single-site-per-chain run.
pub const FINEST_DEVIATION_LIMIT: f64 = 0.05;
/// Relative tolerance of the cycle-count timing identity.
pub const WALL_TIME_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct Fig2Entry {
    pub delta_t: f64,
    pub cycle_time: f64,
    pub n_cycles: usize,
    /// Cycles fitting in the configured window of wall-clock time.
    pub wall_cycles: usize,
    pub pulsed: Trajectory,
    /// Sampled at the pulsed trajectory's comparison times.
    pub effective: Trajectory,
    pub max_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct Fig2Result {
    pub t_total: f64,
    pub time_axis: TimeAxis,
    pub entries: Vec<Fig2Entry>,
}

pub fn cycles_for_wall_time(t_total: f64, cycle_time: f64) -> usize {
    (t_total / cycle_time).round() as usize
}

pub fn run_fig2(config: &ExperimentConfig) -> Result<Fig2Result, CliError> {
    let m = model(config, config.topology());
    let ens = ensemble(config, m.n_sites(), config.run.carbon, config.run.bath)?;
    let opts = run_options(config, false);
    let t_total = config.run.t_total;
    let mut entries = Vec::new();
    for &dt in &config.cycle.delta_t {
        let cycle = PulseCycle::four_pulse(dt, config.cycle.tau_p)?;
        let wall_cycles = cycles_for_wall_time(t_total, cycle.cycle_time()).max(1);
        let n_cycles = match config.cycle.time_axis {
            TimeAxis::Effective => cycles_for_wall_time(t_total, cycle.free_time()).max(1),
            TimeAxis::Wall => wall_cycles,
        };
        log::info!("fig2: Δt = {:.3} μs, {n_cycles} cycles", dt * 1e6);
        let pulsed = run_pulsed(&m, &cycle, &ens, n_cycles, &opts)?;
        let span = match config.cycle.time_axis {
            TimeAxis::Effective => pulsed.effective_times[n_cycles],
            TimeAxis::Wall => pulsed.times[n_cycles],
        };
        let effective = run_effective(&m, &ens, span, n_cycles + 1, &opts)?;
        let max_deviation =
            pulsed.mz.iter().zip(&effective.mz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        entries.push(Fig2Entry {
            delta_t: dt,
            cycle_time: cycle.cycle_time(),
            n_cycles,
            wall_cycles,
            pulsed,
            effective,
            max_deviation,
        });
    }
    Ok(Fig2Result { t_total, time_axis: config.cycle.time_axis, entries })
}

impl Fig2Result {
    /// Deviations ordered from the coarsest to the finest spacing.
    pub fn deviations_coarse_to_fine(&self) -> Vec<(f64, f64)> {
        let mut d: Vec<(f64, f64)> = self.entries.iter().map(|e| (e.delta_t, e.max_deviation)).collect();
        d.sort_by(|a, b| b.0.total_cmp(&a.0));
        d
    }

    pub fn checks(&self) -> Vec<Check> {
        let d = self.deviations_coarse_to_fine();
        let mut checks = Vec::new();
        if d.len() > 1 {
            let worst_ratio = d.windows(2).map(|w| w[1].1 / w[0].1).fold(0.0, f64::max);
            checks.push(Check::below("deviation decreases with the pulse spacing", worst_ratio, 1.0));
        }
        let finest = d.last().expect("at least one spacing").1;
        checks.push(Check::below("finest-spacing max deviation", finest, FINEST_DEVIATION_LIMIT));
        for e in &self.entries {
            let err = (e.wall_cycles as f64 * e.cycle_time - self.t_total).abs() / self.t_total;
            checks.push(Check::new(
                format!("wall time of {} cycles at Δt = {:.3} μs", e.wall_cycles, e.delta_t * 1e6),
                err,
                super::Comparison::AtMost,
                WALL_TIME_TOLERANCE,
            ));
        }
        checks
    }

    pub fn into_report(self) -> Report {
        let checks = self.checks();
        let tables = self
            .entries
            .iter()
            .map(|e| {
                Table::from_columns(
                    format!("fig2_dt_{:.3}us", e.delta_t * 1e6),
                    vec![
                        ("time_s", &e.pulsed.times[..]),
                        ("effective_time_s", &e.pulsed.effective_times[..]),
                        ("mz_effective", &e.effective.mz[..]),
                        ("mz_pulsed", &e.pulsed.mz[..]),
                    ],
                )
            })
            .collect();
        let runs: Vec<_> = self
            .entries
            .iter()
            .map(|e| {
                json!({
                    "delta_t_us": e.delta_t * 1e6,
                    "cycle_time_us": e.cycle_time * 1e6,
                    "n_cycles": e.n_cycles,
                    "cycles_for_window_wall_time": e.wall_cycles,
                    "max_abs_deviation": e.max_deviation,
                    "final_mz_effective": e.effective.mz.last(),
                    "final_mz_pulsed": e.pulsed.mz.last(),
                })
            })
            .collect();
        let axis = match self.time_axis {
            TimeAxis::Effective => "effective",
            TimeAxis::Wall => "wall",
        };
        Report {
            experiment: ExperimentKind::Fig2,
            tables,
            summary: json!({ "t_total_s": self.t_total, "time_axis": axis, "runs": runs }),
            checks,
        }
    }
}
