//! Stochastic unravelings of the master equation.
//!
//! [`run_jump_trajectory`] integrates the quantum-jump unraveling on a sliding
//! window of `L + 1` Fock states, which is exact because the coherent dynamics
//! conserves the excitation number between jumps. [`run_diffusive_trajectory`]
//! integrates a homodyne stochastic Schrödinger equation at a fixed cutoff.
//! [`estimate_ensemble`] runs independent trajectories in parallel and turns
//! their time averages into means with standard errors.

mod diffusive;
mod ensemble;
mod jump;

pub use diffusive::{run_diffusive_trajectory, DiffusiveOptions, DiffusiveRun};
pub use ensemble::{estimate_ensemble, jackknife_ratio, EnsembleEstimate, EnsembleRun, Unraveling};
pub use jump::{run_jump_trajectory, write_event_log, JumpEvent, JumpOptions, JumpRun, TrajectoryState};

use serde::{Deserialize, Serialize};

use crate::model::{Channel, SystemParams};
use crate::{Error, Result};

/// Time grid of a trajectory. Observables are sampled every `sample_every`
/// from `t_burn` to `t_total`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub dt: f64,
    pub t_burn: f64,
    pub t_total: f64,
    pub sample_every: f64,
}

impl Schedule {
    /// Largest step allowed by the accuracy rule
    /// `dt ≤ 0.05 / max(J, |U|, P, κ, g √n̄)` with `n̄ = L P / κ` (or `L` without loss).
    pub fn max_dt(params: &SystemParams) -> f64 {
        let expected = if params.loss > 0.0 {
            params.num_spins as f64 * params.pump / params.loss
        } else {
            params.num_spins as f64
        };
        let rate = params.max_rate().max(params.coupling * expected.max(1.0).sqrt());
        0.05 / rate
    }

    /// Burn-in `50/κ`, total `550/κ`, one sample per `1/κ`, largest allowed step.
    /// Without loss the cavity timescale is replaced by the inverse of the largest rate.
    pub fn default_for(params: &SystemParams) -> Self {
        let tau = if params.loss > 0.0 { 1.0 / params.loss } else { 1.0 / params.max_rate().max(f64::MIN_POSITIVE) };
        Self { dt: Self::max_dt(params), t_burn: 50.0 * tau, t_total: 550.0 * tau, sample_every: tau }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("dt", self.dt), ("sample_every", self.sample_every), ("t_total", self.t_total)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        if !(self.t_burn >= 0.0 && self.t_burn <= self.t_total) {
            return Err(Error::InvalidParameter { name: "t_burn", reason: format!("must lie in [0, t_total], got {}", self.t_burn) });
        }
        Ok(())
    }

    /// Sampling instants `t_burn, t_burn + Δ, …, ≤ t_total`.
    pub fn sample_times(&self) -> impl Iterator<Item = f64> + '_ {
        let count = ((self.t_total - self.t_burn) / self.sample_every + 1e-9).floor() as usize + 1;
        (0..count).map(move |j| self.t_burn + j as f64 * self.sample_every)
    }
}

/// Time averages of diagonal observables accumulated along one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryAverages {
    pub num_spins: usize,
    pub samples: usize,
    pub photon_number: f64,
    /// `⟨a†a†aa⟩`.
    pub photon_second_moment: f64,
    pub total_magnetization: f64,
    /// `⟨Z_i⟩`, index `i − 1`.
    pub site_z: Vec<f64>,
    /// `⟨Z_i Z_j⟩` row-major, `L × L`.
    pub zz: Vec<f64>,
}

impl TrajectoryAverages {
    fn new(num_spins: usize) -> Self {
        Self {
            num_spins,
            samples: 0,
            photon_number: 0.0,
            photon_second_moment: 0.0,
            total_magnetization: 0.0,
            site_z: vec![0.0; num_spins],
            zz: vec![0.0; num_spins * num_spins],
        }
    }

    /// Adds one sample from `(spin, photons, weight)` triples of a normalized state.
    fn accumulate(&mut self, entries: impl Iterator<Item = (usize, usize, f64)>) {
        let l = self.num_spins;
        let mut z = vec![0.0; l];
        for (spin, n, w) in entries {
            if w == 0.0 {
                continue;
            }
            let nf = n as f64;
            self.photon_number += w * nf;
            self.photon_second_moment += w * nf * (nf - 1.0);
            for (i, zi) in z.iter_mut().enumerate() {
                *zi = if spin & (1 << (l - 1 - i)) == 0 { 1.0 } else { -1.0 };
            }
            for i in 0..l {
                self.site_z[i] += w * z[i];
                self.total_magnetization += w * z[i];
                for j in 0..l {
                    self.zz[i * l + j] += w * z[i] * z[j];
                }
            }
        }
        self.samples += 1;
    }

    fn finish(mut self) -> Self {
        if self.samples > 0 {
            let s = self.samples as f64;
            self.photon_number /= s;
            self.photon_second_moment /= s;
            self.total_magnetization /= s;
            self.site_z.iter_mut().for_each(|x| *x /= s);
            self.zz.iter_mut().for_each(|x| *x /= s);
        }
        self
    }

    /// `⟨Z_m Z_l⟩` for 1-based sites.
    pub fn zz_at(&self, m: usize, l: usize) -> f64 {
        self.zz[(m - 1) * self.num_spins + (l - 1)]
    }
}

fn channel_label(channel: Channel) -> String {
    match channel {
        Channel::Pump(site) => format!("pump_{site}"),
        Channel::Loss => "loss".to_string(),
    }
}
