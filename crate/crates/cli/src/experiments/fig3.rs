use serde_json::json;
use spinforge::{run_effective, Trajectory};

use super::{ensemble, model, run_options, Check, Comparison, Report};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::output::Table;

pub const TAIL_FRACTION: f64 = 0.2;
/// Largest tolerated drop of the tail magnetization between consecutive sizes.
pub const INVERSION_TOLERANCE: f64 = 0.02;
pub const EOF_PEAK_MIN: f64 = 0.3;
/// EoF checks apply from this bath size on.
pub const EOF_MIN_HYDROGENS: usize = 10;

#[derive(Debug, Clone)]
pub struct Fig3Result {
    pub t_total: f64,
    /// `(total hydrogens, trajectory)` in config order.
    pub runs: Vec<(usize, Trajectory)>,
}

pub fn run_fig3(config: &ExperimentConfig) -> Result<Fig3Result, CliError> {
    let mut runs = Vec::new();
    for &topo in &config.system.topologies {
        let m = model(config, topo);
        log::info!("fig3: {} hydrogens ({} sites)", topo.n_hydrogens(), m.n_sites());
        let ens = ensemble(config, m.n_sites(), config.run.carbon, config.run.bath)?;
        let traj = run_effective(&m, &ens, config.run.t_total, config.run.n_points, &run_options(config, true))?;
        runs.push((topo.n_hydrogens(), traj));
    }
    Ok(Fig3Result { t_total: config.run.t_total, runs })
}

/// Drops `a[i] − a[i+1] > 0` of a sequence that should increase.
pub fn inversions(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0.0).collect()
}

impl Fig3Result {
    pub fn tail_means(&self) -> Vec<f64> {
        self.runs.iter().map(|(_, t)| t.tail_mean_mz(TAIL_FRACTION)).collect()
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        let mut sorted: Vec<(usize, f64)> =
            self.runs.iter().map(|(n, t)| (*n, t.tail_mean_mz(TAIL_FRACTION))).collect();
        sorted.sort_by_key(|p| p.0);
        if sorted.len() > 1 {
            let drops = inversions(&sorted.iter().map(|p| p.1).collect::<Vec<_>>());
            checks.push(Check::new("tail magnetization inversions", drops.len() as f64, Comparison::AtMost, 1.0));
            checks.push(Check::below(
                "largest tail magnetization inversion",
                drops.iter().copied().fold(0.0, f64::max),
                INVERSION_TOLERANCE,
            ));
        }
        for (n, t) in self.runs.iter().filter(|(n, _)| *n >= EOF_MIN_HYDROGENS) {
            let Some((peak, t_peak)) = t.peak_eof() else { continue };
            let tail = t.tail_mean_eof(TAIL_FRACTION).unwrap_or(f64::NAN);
            checks.push(Check::above(format!("EoF peak at {n} hydrogens"), peak, EOF_PEAK_MIN));
            checks.push(Check::new(
                format!("EoF peak time at {n} hydrogens, fraction of window"),
                t_peak / self.t_total,
                Comparison::AtMost,
                0.5,
            ));
            checks.push(Check::new(
                format!("EoF tail over peak at {n} hydrogens"),
                tail / peak,
                Comparison::AtMost,
                0.5,
            ));
        }
        checks
    }

    pub fn into_report(self) -> Report {
        let checks = self.checks();
        let tables = self
            .runs
            .iter()
            .map(|(n, t)| {
                let eof = t.eof.clone().unwrap_or_default();
                Table::from_columns(
                    format!("fig3_h{n}"),
                    vec![("time_s", &t.times[..]), ("mz", &t.mz[..]), ("eof", &eof[..])],
                )
            })
            .collect();
        let runs: Vec<_> = self
            .runs
            .iter()
            .map(|(n, t)| {
                let peak = t.peak_eof();
                json!({
                    "total_hydrogens": n,
                    "tail_mean_mz": t.tail_mean_mz(TAIL_FRACTION),
                    "eof_peak": peak.map(|p| p.0),
                    "eof_peak_time_s": peak.map(|p| p.1),
                    "tail_mean_eof": t.tail_mean_eof(TAIL_FRACTION),
                })
            })
            .collect();
        Report {
            experiment: ExperimentKind::Fig3,
            tables,
            summary: json!({ "t_total_s": self.t_total, "tail_fraction": TAIL_FRACTION, "runs": runs }),
            checks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversions_are_positive_drops() {
        assert!(inversions(&[0.1, 0.2, 0.3]).is_empty());
        let d = inversions(&[0.1, 0.05, 0.3, 0.2]);
        assert_eq!(d.len(), 2);
        assert!((d[0] - 0.05).abs() < 1e-15 && (d[1] - 0.1).abs() < 1e-15);
    }
}
