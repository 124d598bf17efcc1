//! Quantum-jump trajectories on a sliding Fock window.
//!
//! Starting from a state of definite excitation number `N`, the effective
//! Hamiltonian keeps `N` fixed and a jump changes it by one, so every state
//! along the trajectory has definite `N`. Its photon numbers then lie in
//! `[N − L, N]`, which the window `[base, base + L]` covers exactly. Between
//! jumps only the amplitudes of that sector are integrated; couplings that
//! would leave the window are still evaluated and their weight is checked.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{channel_label, Schedule, TrajectoryAverages};
use crate::hilbert::count_up;
use crate::model::{xxz_diagonal, xxz_flips, Channel, SystemParams};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Window weight allowed outside the tracked Fock states.
pub const LEAK_TOLERANCE: f64 = 1e-10;
/// Bottom-state weight below which a pump jump shifts the window up.
const DROP_WEIGHT: f64 = 1e-12;
/// RK4 is stable for `Γ dt` below about 2.78.
const MAX_DECAY_STEP: f64 = 2.5;

/// Pure state on `2^L` spins ⊗ Fock states `base … base + L`.
///
/// Amplitudes use the spin-major layout of the full space with `L + 1`
/// photon slots: `index = spin · (L + 1) + (n − base)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryState {
    pub num_spins: usize,
    pub amplitudes: Vec<Complex64>,
    pub fock_base: usize,
    pub time: f64,
    pub seed: u64,
    pub norm: f64,
}

impl TrajectoryState {
    /// `|↓…↓⟩ ⊗ |0⟩`.
    pub fn ground_vacuum(num_spins: usize, seed: u64) -> Self {
        let width = num_spins + 1;
        let mut amplitudes = vec![ZERO; (1 << num_spins) * width];
        amplitudes[((1 << num_spins) - 1) * width] = Complex64::from(1.0);
        Self { num_spins, amplitudes, fock_base: 0, time: 0.0, seed, norm: 1.0 }
    }

    pub fn window_width(&self) -> usize {
        self.num_spins + 1
    }

    pub fn amplitude(&self, spin: usize, photons: usize) -> Complex64 {
        if photons < self.fock_base || photons > self.fock_base + self.num_spins {
            return ZERO;
        }
        self.amplitudes[spin * self.window_width() + photons - self.fock_base]
    }

    fn slot(&self, spin: usize, photons: usize) -> usize {
        spin * self.window_width() + photons - self.fock_base
    }

    /// Squared norm of the stored amplitudes.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `(spin, photons, |amp|²)` for every nonzero amplitude.
    fn weights(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.window_width();
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != ZERO)
            .map(move |(i, a)| (i / w, self.fock_base + i % w, a.norm_sqr()))
    }

    fn excitation_number(&self) -> Option<usize> {
        self.weights().next().map(|(s, n, _)| n + count_up(s, self.num_spins))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: Channel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JumpOptions {
    /// Keep the list of jump times and channels.
    pub record_events: bool,
}

#[derive(Clone, Debug)]
pub struct JumpRun {
    pub averages: TrajectoryAverages,
    pub final_state: TrajectoryState,
    pub events: Vec<JumpEvent>,
    pub num_jumps: usize,
    /// Largest weight found outside the window at any step or window move.
    pub max_leak: f64,
    /// Width of the window at every step; constant by construction.
    pub window_width: usize,
}

/// Excitation sector `N = k` restricted to the current window.
struct SectorOps {
    k: usize,
    base: usize,
    /// Window slot of each sector member.
    slots: Vec<usize>,
    /// `(spin, photons)` of each member.
    labels: Vec<(usize, usize)>,
    /// Decay rate `⟨c†c⟩` contribution of each member.
    decay: Vec<f64>,
    /// `H_eff` in CSR over member indices.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    /// `(member, coefficient)` for couplings that land outside the window.
    leaks: Vec<(usize, f64)>,
}

impl SectorOps {
    fn build(params: &SystemParams, k: usize, base: usize) -> Self {
        let l = params.num_spins;
        let width = l + 1;
        let mut labels = Vec::new();
        let mut slots = Vec::new();
        let mut local = vec![usize::MAX; (1 << l) * width];
        for spin in 0..(1usize << l) {
            let up = count_up(spin, l);
            if up > k {
                continue;
            }
            let n = k - up;
            if n < base || n > base + l {
                continue;
            }
            let slot = spin * width + n - base;
            local[slot] = labels.len();
            labels.push((spin, n));
            slots.push(slot);
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut decay = Vec::with_capacity(labels.len());
        let mut leaks = Vec::new();
        let g = params.coupling;
        for (row, &(spin, n)) in labels.iter().enumerate() {
            let downs = l - count_up(spin, l);
            let gamma = params.pump * downs as f64 + params.loss * n as f64;
            decay.push(gamma);
            cols.push(row);
            vals.push(Complex64::new(xxz_diagonal(params, spin), -0.5 * gamma));
            for (s2, amp) in xxz_flips(params, spin) {
                cols.push(local[s2 * width + n - base]);
                vals.push(Complex64::from(amp));
            }
            if g != 0.0 {
                for site in 1..=l {
                    let mask = 1usize << (l - site);
                    // rows gather from sources: ⟨spin,n|H|src⟩
                    let (src_spin, src_n, coef) = if spin & mask == 0 {
                        // spin ↑ here: reached by a σ† from (↓, n + 1)
                        (spin | mask, n + 1, g * ((n + 1) as f64).sqrt())
                    } else {
                        if n == 0 {
                            continue;
                        }
                        // spin ↓ here: reached by a† σ from (↑, n − 1)
                        (spin & !mask, n - 1, g * (n as f64).sqrt())
                    };
                    if src_n >= base && src_n <= base + l {
                        cols.push(local[src_spin * width + src_n - base]);
                        vals.push(Complex64::from(coef));
                    } else {
                        leaks.push((row, coef));
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        debug_assert!(cols.iter().all(|&c| c != usize::MAX));
        Self { k, base, slots, labels, decay, row_ptr, cols, vals, leaks }
    }

    #[cfg(test)]
    fn dim(&self) -> usize {
        self.labels.len()
    }

    /// `out = −i H_eff v`.
    fn rhs(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[p] * v[self.cols[p]];
            }
            *o = -I * acc;
        }
    }

    fn decay_rate(&self, v: &[Complex64]) -> f64 {
        v.iter().zip(&self.decay).map(|(a, g)| a.norm_sqr() * g).sum()
    }
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self { k1: vec![ZERO; n], k2: vec![ZERO; n], k3: vec![ZERO; n], k4: vec![ZERO; n], tmp: vec![ZERO; n] }
    }

    fn resize(&mut self, n: usize) {
        for v in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            v.resize(n, ZERO);
        }
    }

    fn step(&mut self, ops: &SectorOps, v: &[Complex64], h: f64, out: &mut [Complex64]) {
        ops.rhs(v, &mut self.k1);
        for ((t, a), k) in self.tmp.iter_mut().zip(v).zip(&self.k1) {
            *t = a + k * (0.5 * h);
        }
        ops.rhs(&self.tmp, &mut self.k2);
        for ((t, a), k) in self.tmp.iter_mut().zip(v).zip(&self.k2) {
            *t = a + k * (0.5 * h);
        }
        ops.rhs(&self.tmp, &mut self.k3);
        for ((t, a), k) in self.tmp.iter_mut().zip(v).zip(&self.k3) {
            *t = a + k * h;
        }
        ops.rhs(&self.tmp, &mut self.k4);
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i] + (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]) * (h / 6.0);
        }
    }
}

fn sqr_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Root in `[0, h]` of the cubic Hermite interpolant of the squared norm.
fn hermite_crossing(n0: f64, d0: f64, n1: f64, d1: f64, h: f64, target: f64) -> f64 {
    let interp = |s: f64| {
        let t = s / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * n0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * n1 + (t3 - t2) * h * d1
    };
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if interp(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One quantum-jump trajectory from `|↓…↓⟩ ⊗ |0⟩`.
///
/// Integrates `H_eff = H − (i/2) Σ_c c†c` with RK4 until the squared norm
/// reaches a uniform random threshold, locates the crossing on the cubic
/// Hermite interpolant of the norm and re-integrates to it, then applies a
/// channel drawn with weights `⟨c†c⟩`. Observables are sampled on the
/// normalized state at the schedule's sampling instants.
pub fn run_jump_trajectory(params: &SystemParams, seed: u64, schedule: &Schedule, options: JumpOptions) -> Result<JumpRun> {
    params.validate()?;
    schedule.validate()?;
    let l = params.num_spins;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = TrajectoryState::ground_vacuum(l, seed);
    let mut averages = TrajectoryAverages::new(l);
    let mut events = Vec::new();
    let mut num_jumps = 0;
    let mut max_leak = 0.0f64;

    let mut k = state.excitation_number().expect("initial state is nonzero");
    let mut ops = SectorOps::build(params, k, state.fock_base);
    let mut v: Vec<Complex64> = ops.slots.iter().map(|&s| state.amplitudes[s]).collect();
    let mut next = vec![ZERO; v.len()];
    let mut rk = Rk4::new(v.len());
    let mut threshold: f64 = rng.random();
    let samples: Vec<f64> = schedule.sample_times().collect();
    let mut next_sample = 0;
    let mut t = 0.0;
    let dt = schedule.dt;

    while t < schedule.t_total - 1e-12 * schedule.t_total {
        let h = dt.min(schedule.t_total - t);
        let n0 = sqr_norm(&v);
        let gamma0 = ops.decay_rate(&v);
        let max_rate = ops.decay.iter().cloned().fold(0.0, f64::max);
        if max_rate * h > MAX_DECAY_STEP {
            return Err(Error::StepSize { time: t, detail: format!("decay rate {max_rate:.3} times dt {h} exceeds {MAX_DECAY_STEP}") });
        }
        rk.step(&ops, &v, h, &mut next);
        let n1 = sqr_norm(&next);
        if !n1.is_finite() || n1 <= 0.0 || n1 > n0 * (1.0 + 1e-9) {
            return Err(Error::StepSize { time: t, detail: format!("squared norm went from {n0:.6e} to {n1:.6e}") });
        }
        if !ops.leaks.is_empty() {
            let leak: f64 = ops.leaks.iter().map(|&(m, c)| (c * h * v[m].norm()).powi(2)).sum::<f64>() / n0;
            max_leak = max_leak.max(leak);
            if leak > LEAK_TOLERANCE {
                return Err(Error::WindowLeak { time: t, weight: leak });
            }
        }

        if n1 > threshold {
            t += h;
            std::mem::swap(&mut v, &mut next);
        } else {
            let gamma1 = ops.decay_rate(&next);
            let tau = hermite_crossing(n0, -gamma0, n1, -gamma1, h, threshold);
            if tau > 0.0 {
                rk.step(&ops, &v, tau, &mut next);
                std::mem::swap(&mut v, &mut next);
            }
            t += tau;
            let channel = choose_channel(params, &ops, &v, &mut rng);
            for (s, &slot) in ops.slots.iter().enumerate() {
                state.amplitudes[slot] = v[s];
            }
            let leak = apply_jump(&mut state, channel);
            max_leak = max_leak.max(leak);
            if leak > LEAK_TOLERANCE {
                return Err(Error::WindowLeak { time: t, weight: leak });
            }
            num_jumps += 1;
            if options.record_events {
                events.push(JumpEvent { time: t, channel });
            }
            k = state.excitation_number().expect("jump leaves a nonzero state");
            ops = SectorOps::build(params, k, state.fock_base);
            v = ops.slots.iter().map(|&s| state.amplitudes[s]).collect();
            next.resize(v.len(), ZERO);
            rk.resize(v.len());
            threshold = rng.random();
        }

        while next_sample < samples.len() && samples[next_sample] <= t + 1e-12 {
            let norm = sqr_norm(&v);
            averages.accumulate(ops.labels.iter().zip(&v).map(|(&(s, n), a)| (s, n, a.norm_sqr() / norm)));
            next_sample += 1;
        }
    }

    for a in state.amplitudes.iter_mut() {
        *a = ZERO;
    }
    let norm = sqr_norm(&v).sqrt();
    for (s, &slot) in ops.slots.iter().enumerate() {
        state.amplitudes[slot] = v[s] / norm;
    }
    state.time = t;
    state.norm = 1.0;
    debug_assert_eq!(ops.k, k);
    debug_assert_eq!(ops.base, state.fock_base);
    Ok(JumpRun { averages: averages.finish(), window_width: state.window_width(), final_state: state, events, num_jumps, max_leak })
}

fn choose_channel(params: &SystemParams, ops: &SectorOps, v: &[Complex64], rng: &mut ChaCha8Rng) -> Channel {
    let l = params.num_spins;
    let mut weights = vec![0.0; l + 1];
    for (&(spin, n), a) in ops.labels.iter().zip(v) {
        let w = a.norm_sqr();
        for site in 1..=l {
            if spin & (1 << (l - site)) != 0 {
                weights[site - 1] += params.pump * w;
            }
        }
        weights[l] += params.loss * n as f64 * w;
    }
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return if i < l { Channel::Pump(i + 1) } else { Channel::Loss };
        }
        r -= w;
    }
    // rounding at the top end: take the last channel with nonzero weight
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(l);
    if last < l {
        Channel::Pump(last + 1)
    } else {
        Channel::Loss
    }
}

/// Applies a jump, renormalizes and moves the window. Returns the weight
/// that fell outside the window.
fn apply_jump(state: &mut TrajectoryState, channel: Channel) -> f64 {
    let l = state.num_spins;
    let width = state.window_width();
    let old = std::mem::replace(&mut state.amplitudes, vec![ZERO; (1 << l) * width]);
    let old_base = state.fock_base;
    let mut jumped: Vec<(usize, usize, Complex64)> = Vec::new();
    for (i, a) in old.iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let (spin, n) = (i / width, old_base + i % width);
        match channel {
            Channel::Pump(site) => {
                let mask = 1usize << (l - site);
                if spin & mask != 0 {
                    jumped.push((spin & !mask, n, *a));
                }
            }
            Channel::Loss => {
                if n > 0 {
                    jumped.push((spin, n - 1, *a * (n as f64).sqrt()));
                }
            }
        }
    }
    let total: f64 = jumped.iter().map(|j| j.2.norm_sqr()).sum();
    match channel {
        Channel::Loss => state.fock_base = old_base.saturating_sub(1),
        Channel::Pump(_) => {
            let bottom: f64 = jumped.iter().filter(|j| j.1 == old_base).map(|j| j.2.norm_sqr()).sum();
            if bottom < DROP_WEIGHT * total {
                state.fock_base = old_base + 1;
            }
        }
    }
    let scale = 1.0 / total.sqrt();
    let mut leak = 0.0;
    for (spin, n, a) in jumped {
        if n < state.fock_base || n > state.fock_base + l {
            leak += a.norm_sqr() / total;
            continue;
        }
        let slot = state.slot(spin, n);
        state.amplitudes[slot] = a * scale;
    }
    leak
}

/// Writes `time,channel` rows.
pub fn write_event_log(path: &Path, events: &[JumpEvent]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "time,channel")?;
    for e in events {
        writeln!(out, "{:.12e},{}", e.time, channel_label(e.channel))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dark_state_never_jumps() {
        let p = SystemParams::figure_defaults(3, 1.0, 0.0);
        let s = Schedule { dt: 0.05, t_burn: 10.0, t_total: 200.0, sample_every: 1.0 };
        let run = run_jump_trajectory(&p, 7, &s, JumpOptions::default()).unwrap();
        assert_eq!(run.num_jumps, 0);
        assert_eq!(run.averages.photon_number, 0.0);
        assert_eq!(run.averages.total_magnetization, -3.0);
        // constant up to a global phase
        let start = TrajectoryState::ground_vacuum(3, 7);
        assert_eq!(run.final_state.fock_base, 0);
        for (a, b) in run.final_state.amplitudes.iter().zip(&start.amplitudes) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_ops_match_full_effective_hamiltonian() {
        use crate::hilbert::SparseOperator;
        use crate::model::{hamiltonian, jump_operators};
        let p = SystemParams::figure_defaults(3, 0.7, 0.8).with_coupling(0.3).with_loss(0.2).with_fock_dim(9);
        let space = p.space().unwrap();
        let mut heff = hamiltonian(&p, &space).unwrap();
        for c in jump_operators(&p, &space).unwrap() {
            let cdc = c.operator.adjoint().matmul(&c.operator).unwrap();
            heff = heff.sub(&cdc.scale(Complex64::new(0.0, 0.5))).unwrap();
        }
        for k in [0usize, 2, 3, 5] {
            let base = k.saturating_sub(3);
            let ops = SectorOps::build(&p, k, base);
            assert!(ops.leaks.is_empty());
            let idx: Vec<usize> = ops.labels.iter().map(|&(s, n)| space.index(s, n)).collect();
            let mut t = Vec::new();
            for r in 0..ops.dim() {
                for q in ops.row_ptr[r]..ops.row_ptr[r + 1] {
                    t.push((r, ops.cols[q], ops.vals[q]));
                }
            }
            let local = SparseOperator::from_triplets(ops.dim(), ops.dim(), t);
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    assert!((local.get(a, b) - heff.get(i, j)).norm() < 1e-14, "k={k}");
                }
            }
        }
    }

    #[test]
    fn misplaced_window_reports_leaks() {
        let p = SystemParams::figure_defaults(2, 1.0, 1.0);
        // N = 4 with base 0 misses photon number 4
        let ops = SectorOps::build(&p, 4, 0);
        assert!(!ops.leaks.is_empty());
    }

    #[test]
    fn hermite_crossing_of_exponential() {
        let (g, h) = (0.3, 0.2);
        let tau = hermite_crossing(1.0, -g, (-g * h).exp(), -g * (-g * h).exp(), h, (-g * 0.13f64).exp());
        assert!((tau - 0.13).abs() < 1e-6);
    }

    #[test]
    fn identical_seeds_are_reproducible() {
        let p = SystemParams::figure_defaults(2, 1.0, 1.0);
        let s = Schedule { dt: 0.05, t_burn: 20.0, t_total: 120.0, sample_every: 2.0 };
        let a = run_jump_trajectory(&p, 3, &s, JumpOptions { record_events: true }).unwrap();
        let b = run_jump_trajectory(&p, 3, &s, JumpOptions { record_events: true }).unwrap();
        assert_eq!(a.averages, b.averages);
        assert_eq!(a.events, b.events);
        assert!(a.num_jumps > 10);
        assert_eq!(a.averages.samples, 51);
    }

    #[test]
    fn event_log_is_written() {
        let dir = std::env::temp_dir().join(format!("xxz-events-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("events.csv");
        let events = [JumpEvent { time: 1.5, channel: Channel::Pump(2) }, JumpEvent { time: 2.0, channel: Channel::Loss }];
        write_event_log(&path, &events).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().collect::<Vec<_>>(), ["time,channel", "1.500000000000e0,pump_2", "2.000000000000e0,loss"]);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
