//! Built-in configurations that regenerate the data behind each figure.
//!
//! All presets use `g = 0.1 J`, `κ = 0.5 g` and, unless swept, `P = J`. A
//! preset can expand to several runs, for example one per curve, and each run
//! writes its own table into the output directory.

use std::path::Path;

use crate::config::{Axis, EnsembleConfig, Mode, ParamsConfig, RunConfig, SweepAxis, SCHEMA_VERSION};
use crate::CliError;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Vec<RunConfig>,
}

impl Preset {
    /// Runs of this preset with outputs placed under `out_dir`.
    pub fn expand(&self, out_dir: &Path) -> Vec<RunConfig> {
        (self.build)()
            .into_iter()
            .map(|mut c| {
                c.output_path = out_dir.join(&c.output_path).to_string_lossy().into_owned();
                c
            })
            .collect()
    }
}

/// `start, start + step, …` up to and including `stop`, rounded to nine decimals.
fn linear(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect()
}

/// `per_decade` logarithmically spaced points per decade from `lo` to `hi`.
fn logarithmic(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = (decades * per_decade as f64).round() as usize;
    (0..=count).map(|k| lo * 10f64.powf(k as f64 / per_decade as f64)).map(|v| (v * 1e12).round() / 1e12).collect()
}

fn run(mode: Mode, params: ParamsConfig, axis: Option<(Axis, Vec<f64>)>, output: String) -> RunConfig {
    RunConfig {
        schema_version: SCHEMA_VERSION,
        mode,
        params,
        sweep_axis: axis.map(|(name, values)| SweepAxis { name, values }),
        ensemble: None,
        output_path: output,
    }
}

fn ensemble() -> Option<EnsembleConfig> {
    Some(EnsembleConfig { num_trajectories: 200, base_seed: 1, schedule: None, unraveling: Default::default(), event_logs: 0 })
}

fn u_grid() -> Vec<f64> {
    linear(0.1, 5.0, 0.05)
}

fn fig2() -> Vec<RunConfig> {
    [0.1, 0.5, 1.0, 2.0, 5.0]
        .into_iter()
        .map(|u| run(Mode::Sweep, ParamsConfig::figure(4, u, 1.0), Some((Axis::P, logarithmic(0.01, 100.0, 10))), format!("fig2_U{u}.csv")))
        .collect()
}

fn fig3() -> Vec<RunConfig> {
    let mut runs: Vec<RunConfig> = (2..=6)
        .map(|l| run(Mode::Sweep, ParamsConfig::figure(l, 1.0, 1.0), Some((Axis::U, u_grid())), format!("fig3_L{l}.csv")))
        .collect();
    runs.push(run(Mode::Sweep, ParamsConfig::figure(2, 1.0, 1.0), Some((Axis::L, linear(2.0, 6.0, 1.0))), "fig3_scaling.csv".into()));
    runs
}

fn fig4() -> Vec<RunConfig> {
    (2..=5)
        .map(|l| run(Mode::Cooperativity, ParamsConfig::figure(l, 1.0, 1.0), Some((Axis::U, linear(0.1, 5.0, 0.1))), format!("fig4_L{l}.csv")))
        .collect()
}

fn fig5() -> Vec<RunConfig> {
    vec![run(Mode::Spectrum, ParamsConfig::figure(3, 1.0, 1.0), Some((Axis::U, linear(0.1, 5.0, 0.1))), "fig5.csv".into())]
}

fn fig6() -> Vec<RunConfig> {
    vec![run(Mode::Spectrum, ParamsConfig::figure(6, 1.0, 1.0), None, "fig6.csv".into())]
}

fn fig7a() -> Vec<RunConfig> {
    vec![run(Mode::Correlations, ParamsConfig::figure(5, 1.0, 1.0), Some((Axis::U, linear(0.1, 3.0, 0.05))), "fig7a.csv".into())]
}

fn fig7b() -> Vec<RunConfig> {
    [0.8, 1.0]
        .into_iter()
        .map(|u| {
            let mut c = run(Mode::Trajectory, ParamsConfig::figure(3, u, 1.0), Some((Axis::L, linear(3.0, 11.0, 1.0))), format!("fig7b_U{u}.csv"));
            c.ensemble = ensemble();
            c
        })
        .collect()
}

fn fig7c() -> Vec<RunConfig> {
    [0.8, 1.0, 1.2]
        .into_iter()
        .map(|u| {
            let mut c = run(Mode::Trajectory, ParamsConfig::figure(11, u, 1.0), None, format!("fig7c_U{u}.csv"));
            c.ensemble = ensemble();
            c
        })
        .collect()
}

pub fn list_presets() -> &'static [Preset] {
    const PRESETS: &[Preset] = &[
        Preset { name: "fig2", description: "L=4 photon number, g2 and Z_T/L against a log pump grid for U/J in {0.1, 0.5, 1, 2, 5}", build: fig2 },
        Preset { name: "fig3", description: "U/J sweeps at P=J for L=2..6 and the L scaling at U=J", build: fig3 },
        Preset { name: "fig4", description: "C_f and C_XXZ against U/J for L=2..5", build: fig4 },
        Preset { name: "fig5", description: "L=3 eigenstate probabilities, energies and magnetizations against U/J", build: fig5 },
        Preset { name: "fig6", description: "L=6 eigenstate decomposition at U=J with bright states marked", build: fig6 },
        Preset { name: "fig7a", description: "exact L=5 charge correlations from site 2 against U/J", build: fig7a },
        Preset { name: "fig7b", description: "trajectory correlations against L for U/J in {0.8, 1}", build: fig7b },
        Preset { name: "fig7c", description: "trajectory correlations against distance, L=11, U/J in {0.8, 1, 1.2}", build: fig7c },
    ];
    PRESETS
}

pub fn find_preset(name: &str) -> Result<&'static Preset, CliError> {
    list_presets().iter().find(|p| p.name == name).ok_or_else(|| CliError::UnknownPreset {
        name: name.to_string(),
        valid: list_presets().iter().map(|p| p.name).collect::<Vec<_>>().join(", "),
    })
}
