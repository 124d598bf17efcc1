//! Homodyne stochastic Schrödinger equation at a fixed Fock cutoff.
//!
//! Each channel `c` contributes a real Wiener increment `dW_c`:
//!
//! ```text
//! dψ = [−iH − ½ Σ_c (c†c − 2x_c c + x_c²)] ψ dt + Σ_c (c − x_c) ψ dW_c,
//! x_c = ⟨c + c†⟩ / 2
//! ```
//!
//! integrated with Euler–Maruyama and renormalized after each step. Its
//! ensemble mean of `|ψ⟩⟨ψ|` follows the master equation.

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Schedule, TrajectoryAverages};
use crate::hilbert::SparseOperator;
use crate::model::{hamiltonian, jump_operators, SystemParams};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiffusiveOptions {
    /// Accumulate the time-averaged projector `|ψ⟩⟨ψ|`.
    pub record_mean_state: bool,
}

#[derive(Clone, Debug)]
pub struct DiffusiveRun {
    pub averages: TrajectoryAverages,
    /// Time average of `|ψ⟩⟨ψ|` over the sampling instants, when requested.
    pub mean_state: Option<Mat<Complex64>>,
    /// Largest population of the top Fock state seen at a sampling instant.
    pub max_top_population: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// One diffusive trajectory from `|↓…↓⟩ ⊗ |0⟩` on the full `n_max` cutoff.
pub fn run_diffusive_trajectory(params: &SystemParams, seed: u64, schedule: &Schedule, options: DiffusiveOptions) -> Result<DiffusiveRun> {
    params.validate()?;
    schedule.validate()?;
    let space = params.space()?;
    let d = space.dim();
    let h = hamiltonian(params, &space)?;
    let channels: Vec<SparseOperator> = jump_operators(params, &space)?
        .into_iter()
        .map(|j| j.operator)
        .filter(|c| c.nnz() > 0)
        .collect();
    let mut damping = SparseOperator::zeros(d, d);
    for c in &channels {
        damping = damping.add(&c.adjoint().matmul(c)?)?;
    }
    // −iH − ½ Σ c†c
    let drift = h.scale(-I).sub(&damping.scale(Complex64::from(0.5)))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = vec![ZERO; d];
    psi[space.index(space.spin_dim() - 1, 0)] = Complex64::from(1.0);
    let mut averages = TrajectoryAverages::new(space.num_spins());
    let mut mean_state = options.record_mean_state.then(|| Mat::<Complex64>::zeros(d, d));
    let mut max_top = 0.0f64;
    let samples: Vec<f64> = schedule.sample_times().collect();
    let mut next_sample = 0;
    let mut cpsi: Vec<Vec<Complex64>> = vec![vec![ZERO; d]; channels.len()];
    let mut update = vec![ZERO; d];
    let mut t = 0.0;

    while t < schedule.t_total - 1e-12 * schedule.t_total {
        let dt = schedule.dt.min(schedule.t_total - t);
        let sdt = dt.sqrt();
        drift.apply(&psi, &mut update);
        for u in update.iter_mut() {
            *u *= dt;
        }
        for (c, out) in channels.iter().zip(cpsi.iter_mut()) {
            c.apply(&psi, out);
            let x = dot(&psi, out).re;
            let dw: f64 = StandardNormal.sample(&mut rng);
            let dw = dw * sdt;
            for ((u, co), p) in update.iter_mut().zip(out.iter()).zip(&psi) {
                *u += co * (x * dt + dw) - p * (0.5 * x * x * dt + x * dw);
            }
        }
        let mut norm = 0.0;
        for (p, u) in psi.iter_mut().zip(&update) {
            *p += u;
            norm += p.norm_sqr();
        }
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::StepSize { time: t, detail: format!("diffusive state norm became {norm}") });
        }
        let inv = 1.0 / norm.sqrt();
        psi.iter_mut().for_each(|p| *p *= inv);
        t += dt;

        while next_sample < samples.len() && samples[next_sample] <= t + 1e-12 {
            averages.accumulate(psi.iter().enumerate().map(|(i, a)| {
                let (s, n) = space.split(i);
                (s, n, a.norm_sqr())
            }));
            let top = space.fock_dim() - 1;
            let p_top: f64 = (0..space.spin_dim()).map(|s| psi[space.index(s, top)].norm_sqr()).sum();
            max_top = max_top.max(p_top);
            if let Some(m) = mean_state.as_mut() {
                for j in 0..d {
                    if psi[j] == ZERO {
                        continue;
                    }
                    let cj = psi[j].conj();
                    for i in 0..d {
                        m[(i, j)] += psi[i] * cj;
                    }
                }
            }
            next_sample += 1;
        }
    }
    let averages = averages.finish();
    if let Some(m) = mean_state.as_mut() {
        let s = averages.samples.max(1) as f64;
        *m *= faer::Scale(Complex64::from(1.0 / s));
    }
    Ok(DiffusiveRun { averages, mean_state, max_top_population: max_top })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_pump_stays_in_ground_vacuum() {
        let p = SystemParams::figure_defaults(2, 1.0, 0.0).with_fock_dim(4);
        let s = Schedule { dt: 0.01, t_burn: 1.0, t_total: 20.0, sample_every: 0.5 };
        let run = run_diffusive_trajectory(&p, 1, &s, DiffusiveOptions::default()).unwrap();
        assert_eq!(run.averages.photon_number, 0.0);
        assert!((run.averages.total_magnetization + 2.0).abs() < 1e-14);
    }

    #[test]
    fn mean_state_is_a_density_matrix() {
        let p = SystemParams::figure_defaults(1, 0.0, 0.5).with_fock_dim(4).with_coupling(0.3).with_loss(0.4);
        let s = Schedule { dt: 0.01, t_burn: 5.0, t_total: 30.0, sample_every: 0.5 };
        let run = run_diffusive_trajectory(&p, 9, &s, DiffusiveOptions { record_mean_state: true }).unwrap();
        let m = run.mean_state.unwrap();
        let tr: Complex64 = (0..m.nrows()).map(|i| m[(i, i)]).sum();
        assert!((tr - 1.0).norm() < 1e-10);
        let n: f64 = (0..m.nrows()).map(|i| m[(i, i)].re * (i % 4) as f64).sum();
        assert!((n - run.averages.photon_number).abs() < 1e-10);
    }
}
