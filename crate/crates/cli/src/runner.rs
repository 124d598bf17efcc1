use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use xxz_laser::ness::{
    adaptive_cutoff_ness, ground_vacuum, relax_to_steady_state, solve_ness_with, CutoffSchedule, NessOptions, NessSolution,
};
use xxz_laser::observables::{
    cooperativity_fraction, cooperativity_xxz, diagonalize_xxz, g2_zero, partial_trace_cavity, photon_number,
    reference_site, site_magnetization, spectral_decomposition, total_magnetization, zz_correlation,
};
use xxz_laser::trajectories::{estimate_ensemble, run_jump_trajectory, write_event_log, JumpOptions, Schedule, Unraveling};
use xxz_laser::{DensityMatrix, Error};

use crate::config::{EnsembleConfig, Mode, ParamsConfig, RunConfig, SCHEMA_VERSION};
use crate::table::{self, Method, Metadata, Row, RowDiagnostics};
use crate::{exit_code_for, CliError};

/// A grid point that could not be computed.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub index: usize,
    pub point: ParamsConfig,
    pub error: String,
    pub exit_code: u8,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
    pub config_sha256: String,
    pub output: PathBuf,
    pub elapsed_seconds: f64,
}

impl RunOutcome {
    /// Short human-readable report, a few key rows per grid point.
    pub fn summary(&self, config: &RunConfig) -> String {
        let mut out = format!(
            "mode {} : {} rows from {} point(s) -> {}\n",
            config.mode.as_str(),
            self.rows.len(),
            config.points().len(),
            self.output.display()
        );
        let mut shown = 0;
        let mut last: Option<ParamsConfig> = None;
        for row in &self.rows {
            if last.map(|p| p != row.point).unwrap_or(true) {
                shown = 0;
                last = Some(row.point);
                let p = &row.point;
                out += &format!("  L={} U/J={} P/J={}\n", p.num_spins, p.interaction / p.hopping, p.pump / p.hopping);
            }
            if shown < 4 {
                let value = row.value.map(|v| format!("{v:.6}")).unwrap_or_else(|| "undefined".into());
                let se = if row.method == Method::Exact { String::new() } else { format!(" ± {:.2e}", row.standard_error) };
                let name = if row.label.is_empty() { row.observable.clone() } else { format!("{}[{}]", row.observable, row.label) };
                out += &format!("    {name} = {value}{se} [{}]\n", row.method.as_str());
                shown += 1;
            }
        }
        for f in &self.failures {
            out += &format!("  FAILED point {} (L={} U={} P={}): {}\n", f.index, f.point.num_spins, f.point.interaction, f.point.pump, f.error);
        }
        out
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Runs every grid point, writes the table, the sidecar and, when points fail,
/// the failure manifest. Returns an error carrying the exit code when any
/// point failed; completed rows are on disk either way.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let start = std::time::Instant::now();
    let points = config.points();
    let output = PathBuf::from(&config.output_path);
    let results: Vec<Result<Vec<Row>, Error>> =
        points.par_iter().enumerate().map(|(index, point)| compute_point(config, index, point, &output)).collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (index, (point, result)) in points.iter().zip(results).enumerate() {
        match result {
            Ok(r) => rows.extend(r),
            Err(e) => failures.push(Failure { index, point: *point, exit_code: exit_code_for(&e), error: budget_hint(&e) }),
        }
    }
    let hash = config_hash(config);
    let meta = Metadata { schema_version: SCHEMA_VERSION, config_sha256: &hash, code_version: xxz_laser::VERSION, mode: config.mode.as_str() };
    let bytes = table::render(&meta, &rows).map_err(|e| CliError::io(&output, e))?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(&output, bytes).map_err(|e| CliError::io(&output, e))?;

    let elapsed_seconds = start.elapsed().as_secs_f64();
    let sidecar = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "config_sha256": hash,
        "code_version": xxz_laser::VERSION,
        "created": chrono::Utc::now().to_rfc3339(),
        "elapsed_seconds": elapsed_seconds,
        "rows": rows.len(),
        "failed_points": failures.len(),
        "config": config,
    });
    write_json(&suffixed(&output, ".meta.json"), &sidecar)?;
    let manifest = suffixed(&output, ".failures.json");
    if failures.is_empty() {
        let _ = std::fs::remove_file(&manifest);
    } else {
        write_json(&manifest, &serde_json::json!({ "config_sha256": hash, "failures": failures }))?;
        return Err(CliError::Partial {
            failed: failures.len(),
            total: points.len(),
            first: failures[0].error.clone(),
            manifest: manifest.display().to_string(),
            code: failures[0].exit_code,
        });
    }
    Ok(RunOutcome { rows, failures, config_sha256: hash, output, elapsed_seconds })
}

fn budget_hint(e: &Error) -> String {
    match e {
        Error::SizeBudget { .. } | Error::CutoffBudget { .. } => format!("{e}; the exact solver is out of budget here, use mode trajectory"),
        _ => e.to_string(),
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn compute_point(config: &RunConfig, index: usize, point: &ParamsConfig, output: &Path) -> Result<Vec<Row>, Error> {
    match config.mode {
        Mode::Ness | Mode::Sweep => ness_rows(point),
        Mode::Spectrum => spectrum_rows(point),
        Mode::Correlations => correlation_rows(point),
        Mode::Cooperativity => cooperativity_rows(point),
        Mode::Trajectory => {
            let ensemble = config.ensemble.as_ref().expect("validated");
            trajectory_rows(point, ensemble, index, output)
        }
    }
}

/// Steady state at one grid point together with how it was obtained.
struct Exact {
    point: ParamsConfig,
    solution: NessSolution,
    flags: Vec<String>,
}

impl Exact {
    fn row(&self, observable: &str, value: f64) -> Row {
        Row::exact(self.point, observable, value, RowDiagnostics::from(&self.solution.diagnostics)).with_flags(&self.flags)
    }

    fn state(&self) -> &DensityMatrix {
        &self.solution.state
    }
}

/// Fixed or adaptive cutoff. A degenerate generator (no pump) is relaxed from
/// the all-down vacuum instead, growing the cutoff the same way.
fn solve_exact(point: &ParamsConfig) -> Result<Exact, Error> {
    let opts = NessOptions::default();
    let params = point.system();
    let attempt = match point.n_max {
        Some(_) => solve_ness_with(&params, &opts).map(|s| (s, params.fock_dim)),
        None => adaptive_cutoff_ness(&params, &opts, &CutoffSchedule::default()).map(|a| (a.solution, a.chosen_fock_dim)),
    };
    let (solution, n_max, flags) = match attempt {
        Ok((s, n)) => (s, n, Vec::new()),
        Err(Error::DegenerateSteadyState { .. }) => {
            let schedule = CutoffSchedule::default();
            let mut fock = params.fock_dim;
            loop {
                let p = params.with_fock_dim(fock);
                let s = relax_to_steady_state(&p, &ground_vacuum(p.space()?), &opts)?;
                if point.n_max.is_some() || s.diagnostics.top_fock_population < schedule.top_population {
                    break (s, fock, vec!["degenerate_relaxed_from_ground".to_string()]);
                }
                fock = schedule.next(fock);
            }
        }
        Err(e) => return Err(e),
    };
    Ok(Exact { point: ParamsConfig { n_max: Some(n_max), ..*point }, solution, flags })
}

fn ness_rows(point: &ParamsConfig) -> Result<Vec<Row>, Error> {
    let exact = solve_exact(point)?;
    let state = exact.state();
    let l = point.num_spins as f64;
    let z = total_magnetization(state);
    let g2 = match g2_zero(state) {
        Ok(v) => exact.row("g2_zero", v),
        Err(Error::UndefinedStatistic(_)) => exact.row("g2_zero", f64::NAN).undefined(),
        Err(e) => return Err(e),
    };
    Ok(vec![exact.row("photon_number", photon_number(state)), g2, exact.row("total_magnetization", z), exact.row("magnetization_per_site", z / l)])
}

fn spectrum_rows(point: &ParamsConfig) -> Result<Vec<Row>, Error> {
    let params = point.system();
    let basis = diagonalize_xxz(&params)?;
    let exact = solve_exact(point)?;
    let records = spectral_decomposition(&partial_trace_cavity(exact.state()), &basis)?;
    Ok(records
        .into_iter()
        .map(|r| {
            let mut row = exact.row("probability", r.probability).with_label(r.eigen_index.to_string());
            row.energy = Some(r.energy);
            row.magnetization = Some(r.magnetization);
            row.bright = Some(r.is_bright());
            if r.top3 {
                row.flags.push("top3".into());
            }
            row
        })
        .collect())
}

fn correlation_rows(point: &ParamsConfig) -> Result<Vec<Row>, Error> {
    let exact = solve_exact(point)?;
    let state = exact.state();
    let l = point.num_spins;
    let mut rows = Vec::new();
    for site in 1..=l {
        rows.push(exact.row("z", site_magnetization(state, site)?).with_label(site.to_string()));
    }
    let m = reference_site(l);
    for other in m + 1..=l {
        let c = zz_correlation(state, m, other)?;
        let label = format!("{m}:{other}");
        rows.push(exact.row("zz", c.raw).with_label(label.clone()));
        rows.push(match c.ratio {
            Some(r) => exact.row("o_zz", r).with_label(label),
            None => exact.row("o_zz", f64::NAN).with_label(label).undefined(),
        });
    }
    Ok(rows)
}

fn cooperativity_rows(point: &ParamsConfig) -> Result<Vec<Row>, Error> {
    let exact = solve_exact(point)?;
    let n_xxz = photon_number(exact.state());
    // the chain-free laser shares the cutoff so that truncation cancels in C_XXZ
    let free_params = exact.point.system().without_chain();
    let n_free = photon_number(&solve_ness_with(&free_params, &NessOptions::default())?.state);
    let single = ParamsConfig { num_spins: 1, interaction: 0.0, n_max: None, ..*point };
    let single_exact = solve_exact(&single)?;
    let n_single = photon_number(single_exact.state());
    let contrast = |name: &str, v: xxz_laser::Result<f64>| match v {
        Ok(v) => Ok(exact.row(name, v)),
        Err(Error::UndefinedStatistic(_)) => Ok(exact.row(name, f64::NAN).undefined()),
        Err(e) => Err(e),
    };
    Ok(vec![
        exact.row("photon_number", n_xxz),
        exact.row("photon_number_free", n_free),
        exact.row("photon_number_single", n_single),
        contrast("c_f", cooperativity_fraction(n_xxz, n_single, point.num_spins))?,
        contrast("c_xxz", cooperativity_xxz(n_xxz, n_free))?,
    ])
}

/// Splits ensemble names such as `o_zz_2_4` into `("o_zz", "2:4")`.
fn split_name(name: &str) -> (String, String) {
    for base in ["o_zz", "zz", "z"] {
        if let Some(rest) = name.strip_prefix(base).and_then(|r| r.strip_prefix('_')) {
            if rest.split('_').all(|p| p.parse::<usize>().is_ok()) {
                return (base.to_string(), rest.replace('_', ":"));
            }
        }
    }
    (name.to_string(), String::new())
}

fn trajectory_rows(point: &ParamsConfig, ensemble: &EnsembleConfig, index: usize, output: &Path) -> Result<Vec<Row>, Error> {
    let (params, n_max, method) = match ensemble.unraveling {
        Unraveling::Jump => (point.system(), None, Method::Jump),
        Unraveling::Diffusive => {
            let n = match point.n_max {
                Some(n) => n,
                None => adaptive_cutoff_ness(&point.system(), &NessOptions::default(), &CutoffSchedule::default())?.chosen_fock_dim,
            };
            (point.system().with_fock_dim(n), Some(n), Method::Diffusive)
        }
    };
    let schedule = ensemble.schedule.unwrap_or_else(|| Schedule::default_for(&params));
    let run = estimate_ensemble(&params, ensemble.num_trajectories, ensemble.base_seed, &schedule, ensemble.unraveling)?;
    if ensemble.unraveling == Unraveling::Jump {
        for k in 0..ensemble.event_logs.min(ensemble.num_trajectories) {
            let seed = ensemble.base_seed.wrapping_add(k as u64);
            let traj = run_jump_trajectory(&params, seed, &schedule, JumpOptions { record_events: true })?;
            let path = suffixed(output, &format!(".point{index}.traj{k}.events.csv"));
            write_event_log(&path, &traj.events).map_err(|e| Error::Linalg(format!("writing {}: {e}", path.display())))?;
        }
    }
    let row_point = ParamsConfig { n_max, ..*point };
    Ok(run
        .estimates
        .iter()
        .map(|e| {
            let (observable, label) = split_name(&e.observable_name);
            let mut row = Row {
                point: row_point,
                observable,
                label,
                value: Some(e.mean),
                standard_error: e.standard_error,
                method,
                flags: Vec::new(),
                energy: None,
                magnetization: None,
                bright: None,
                diagnostics: None,
            };
            if !e.defined {
                row = row.undefined();
                row.standard_error = 0.0;
            }
            row
        })
        .collect())
}
