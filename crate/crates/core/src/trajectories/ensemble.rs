use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_diffusive_trajectory, run_jump_trajectory, DiffusiveOptions, JumpOptions, Schedule, TrajectoryAverages};
use crate::model::SystemParams;
use crate::observables::{reference_site, PHOTON_FLOOR, ZZ_DENOMINATOR_FLOOR};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unraveling {
    #[default]
    Jump,
    Diffusive,
}

/// Mean and standard error of one observable over trajectory time averages.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleEstimate {
    pub observable_name: String,
    /// `NaN` when the statistic is undefined (see `defined`).
    pub mean: f64,
    pub standard_error: f64,
    pub defined: bool,
    pub num_trajectories: usize,
    pub burn_in: f64,
    pub total_time: f64,
}

#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub estimates: Vec<EnsembleEstimate>,
    /// Per-trajectory time averages, in trajectory order.
    pub records: Vec<TrajectoryAverages>,
    pub unraveling: Unraveling,
}

impl EnsembleRun {
    pub fn get(&self, name: &str) -> Option<&EnsembleEstimate> {
        self.estimates.iter().find(|e| e.observable_name == name)
    }
}

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Jackknife estimate of `f(column means)` with its standard error.
fn jackknife(columns: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let n = columns[0].len();
    let sums: Vec<f64> = columns.iter().map(|c| c.iter().sum()).collect();
    let full: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let value = f(&full);
    let leave_out: Vec<f64> = (0..n)
        .map(|k| {
            let means: Vec<f64> = columns.iter().zip(&sums).map(|(c, s)| (s - c[k]) / (n - 1) as f64).collect();
            f(&means)
        })
        .collect();
    let mean_lo = leave_out.iter().sum::<f64>() / n as f64;
    let var = leave_out.iter().map(|v| (v - mean_lo).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (value, var.sqrt())
}

/// Ratio of means `Σa / Σb` with a jackknife standard error.
pub fn jackknife_ratio(numerator: &[f64], denominator: &[f64]) -> (f64, f64) {
    jackknife(&[numerator.to_vec(), denominator.to_vec()], |m| m[0] / m[1])
}

/// Runs `num_trajectories` independent trajectories with seeds
/// `base_seed + k` and aggregates their time averages.
///
/// Reported observables: `photon_number`, `g2_zero` (ratio of mean moments),
/// `total_magnetization`, `z_i` for every site, and with `m = ⌊L/2⌋` the raw
/// `zz_m_l` and normalized `o_zz_m_l` for every `l > m`.
pub fn estimate_ensemble(
    params: &SystemParams,
    num_trajectories: usize,
    base_seed: u64,
    schedule: &Schedule,
    unraveling: Unraveling,
) -> Result<EnsembleRun> {
    if num_trajectories < 2 {
        return Err(Error::InvalidParameter { name: "num_trajectories", reason: "at least two trajectories are needed".into() });
    }
    params.validate()?;
    schedule.validate()?;
    let results: Vec<Result<TrajectoryAverages>> = (0..num_trajectories)
        .into_par_iter()
        .map(|k| {
            let seed = base_seed.wrapping_add(k as u64);
            match unraveling {
                Unraveling::Jump => run_jump_trajectory(params, seed, schedule, JumpOptions::default()).map(|r| r.averages),
                Unraveling::Diffusive => run_diffusive_trajectory(params, seed, schedule, DiffusiveOptions::default()).map(|r| r.averages),
            }
        })
        .collect();
    let mut records = Vec::with_capacity(num_trajectories);
    for (index, r) in results.into_iter().enumerate() {
        records.push(r.map_err(|e| Error::Trajectory { index, source: Box::new(e) })?);
    }
    let estimates = summarize(&records, params.num_spins, num_trajectories, schedule);
    Ok(EnsembleRun { estimates, records, unraveling })
}

fn summarize(records: &[TrajectoryAverages], l: usize, n: usize, schedule: &Schedule) -> Vec<EnsembleEstimate> {
    let make = |name: String, (mean, se): (f64, f64), defined: bool| EnsembleEstimate {
        observable_name: name,
        mean: if defined { mean } else { f64::NAN },
        standard_error: if defined { se } else { f64::NAN },
        defined,
        num_trajectories: n,
        burn_in: schedule.t_burn,
        total_time: schedule.t_total,
    };
    let column = |f: &dyn Fn(&TrajectoryAverages) -> f64| records.iter().map(f).collect::<Vec<f64>>();

    let photons = column(&|r| r.photon_number);
    let second = column(&|r| r.photon_second_moment);
    let mut out = vec![make("photon_number".into(), mean_and_error(&photons), true)];
    let n_mean = photons.iter().sum::<f64>() / n as f64;
    let g2 = jackknife(&[second, photons], |m| m[0] / (m[1] * m[1]));
    out.push(make("g2_zero".into(), g2, n_mean > PHOTON_FLOOR));
    out.push(make("total_magnetization".into(), mean_and_error(&column(&|r| r.total_magnetization)), true));
    for site in 1..=l {
        out.push(make(format!("z_{site}"), mean_and_error(&column(&|r| r.site_z[site - 1])), true));
    }
    let m = reference_site(l);
    for other in m + 1..=l {
        let zz = column(&|r| r.zz_at(m, other));
        let zm = column(&|r| r.site_z[m - 1]);
        let zl = column(&|r| r.site_z[other - 1]);
        out.push(make(format!("zz_{m}_{other}"), mean_and_error(&zz), true));
        let denom = (zm.iter().sum::<f64>() / n as f64) * (zl.iter().sum::<f64>() / n as f64);
        let ratio = jackknife(&[zz, zm, zl], |v| v[0] / (v[1] * v[2]));
        out.push(make(format!("o_zz_{m}_{other}"), ratio, denom.abs() >= ZZ_DENOMINATOR_FLOOR));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_linear_statistic_is_standard_error() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let (m, se) = jackknife(&[a.to_vec()], |v| v[0]);
        let (m2, se2) = mean_and_error(&a);
        assert!((m - m2).abs() < 1e-15 && (se - se2).abs() < 1e-14);
        let (r, _) = jackknife_ratio(&[2.0, 4.0], &[1.0, 2.0]);
        assert_eq!(r, 2.0);
    }

    #[test]
    fn rejects_single_trajectory() {
        let p = SystemParams::figure_defaults(1, 0.0, 1.0);
        let s = Schedule { dt: 0.05, t_burn: 1.0, t_total: 2.0, sample_every: 1.0 };
        assert!(estimate_ensemble(&p, 1, 0, &s, Unraveling::Jump).is_err());
    }

    #[test]
    fn errors_carry_trajectory_index() {
        let p = SystemParams::figure_defaults(2, 1.0, 1.0);
        // Γ dt far beyond the RK4 stability limit
        let s = Schedule { dt: 5.0, t_burn: 0.0, t_total: 50.0, sample_every: 5.0 };
        match estimate_ensemble(&p, 3, 0, &s, Unraveling::Jump).unwrap_err() {
            Error::Trajectory { index, source } => {
                assert_eq!(index, 0);
                assert!(matches!(*source, Error::StepSize { .. }));
            }
            e => panic!("{e}"),
        }
    }
}
