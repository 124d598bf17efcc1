use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate")).args(args).output().expect("binary runs")
}

/// Writes `config` with `output_path` pointing into `dir` and returns both paths.
fn config_file(dir: &Path, name: &str, mut config: serde_json::Value) -> (PathBuf, PathBuf) {
    let out = dir.join(format!("{name}.csv"));
    config["output_path"] = out.to_string_lossy().into_owned().into();
    config["schema_version"] = 1.into();
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, config.to_string()).unwrap();
    (path, out)
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Table {
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
        let header = split(lines.next().unwrap());
        Table { header, rows: lines.map(split).collect() }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
    }

    fn select(&self, observable: &str) -> Vec<&Vec<String>> {
        let c = self.col("observable");
        self.rows.iter().filter(|r| r[c] == observable).collect()
    }

    fn values(&self, observable: &str) -> Vec<f64> {
        let v = self.col("value");
        self.select(observable).iter().map(|r| r[v].parse().unwrap()).collect()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unpumped_chain_stays_dark() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = config_file(dir.path(), "dark", serde_json::json!({"mode": "ness", "params": {"L": 2, "P": 0.0}}));
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Table::read(&out);
    assert!(t.values("photon_number")[0].abs() < 1e-12);
    assert!((t.values("total_magnetization")[0] + 2.0).abs() < 1e-9);
    let g2 = t.select("g2_zero");
    assert_eq!(g2[0][t.col("value")], "");
    assert!(g2[0][t.col("flags")].contains("undefined"));
}

#[test]
fn interaction_sweep_peaks_at_isotropic_point() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = config_file(
        dir.path(),
        "sweep",
        serde_json::json!({"mode": "sweep", "params": {"L": 4}, "sweep_axis": {"name": "U", "values": [5.0, 0.1, 1.0, 2.0, 0.5]}}),
    );
    let o = simulate(&["--config", cfg.to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Table::read(&out);
    let u: Vec<f64> = t.select("photon_number").iter().map(|r| r[t.col("U/J")].parse().unwrap()).collect();
    assert_eq!(u, [0.1, 0.5, 1.0, 2.0, 5.0]);
    let n = t.values("photon_number");
    let best = (0..n.len()).max_by(|&a, &b| n[a].total_cmp(&n[b])).unwrap();
    assert_eq!(u[best], 1.0, "{n:?}");
    assert!(t.select("photon_number").iter().all(|r| r[t.col("method")] == "exact" && r[t.col("standard_error")] == "0"));
    assert!(String::from_utf8_lossy(&o.stdout).contains("photon_number"));
}

#[test]
fn cooperativity_contrast_vanishes_at_isotropic_point() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = config_file(dir.path(), "coop", serde_json::json!({"mode": "cooperativity", "params": {"L": 3}}));
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Table::read(&out);
    assert!(t.values("c_xxz")[0].abs() < 1e-6);
    let n = t.values("photon_number")[0];
    let single = t.values("photon_number_single")[0];
    let cf = t.values("c_f")[0];
    assert!((cf - (n - 3.0 * single) / (n + 3.0 * single)).abs() < 1e-9);
}

#[test]
fn spectrum_marks_bright_and_top_states() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = config_file(dir.path(), "spectrum", serde_json::json!({"mode": "spectrum", "params": {"L": 3}}));
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Table::read(&out);
    let rows = t.select("probability");
    assert_eq!(rows.len(), 8);
    assert_eq!(rows.iter().filter(|r| r[t.col("bright")] == "true").count(), 4);
    assert_eq!(rows.iter().filter(|r| r[t.col("flags")].contains("top3")).count(), 3);
    let total: f64 = t.values("probability").iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn correlations_use_the_middle_reference_site() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = config_file(dir.path(), "corr", serde_json::json!({"mode": "correlations", "params": {"L": 4, "U": 2.0}}));
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Table::read(&out);
    let labels: Vec<&str> = t.select("o_zz").iter().map(|r| r[t.col("label")].as_str()).collect();
    assert_eq!(labels, ["2:3", "2:4"]);
    assert_eq!(t.values("z").len(), 4);
}

#[test]
fn runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let config = serde_json::json!({
        "mode": "trajectory",
        "params": {"L": 2, "g": 0.5, "P": 0.5, "kappa": 1.0},
        "ensemble": {"num_trajectories": 8, "base_seed": 5, "schedule": {"dt": 0.02, "t_burn": 5.0, "t_total": 25.0, "sample_every": 0.5}, "event_logs": 1}
    });
    let (cfg, out) = config_file(dir.path(), "traj", config);
    let run = || {
        let o = simulate(&["--config", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(&out).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    let t = Table::read(&out);
    assert!(t.rows.iter().all(|r| r[t.col("method")] == "jump" && r[t.col("n_max")].is_empty()));
    assert!(t.values("photon_number")[0] > 0.0);
    assert!(t.select("o_zz").iter().any(|r| r[t.col("label")] == "1:2"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["ensemble"]["base_seed"], 5);
    assert!(meta["config_sha256"].as_str().unwrap().len() == 64);
    let hash_line = String::from_utf8_lossy(&first).lines().find(|l| l.starts_with("# config_sha256")).unwrap().to_string();
    assert!(hash_line.ends_with(meta["config_sha256"].as_str().unwrap()));
    assert!(dir.path().join("traj.csv.point0.traj0.events.csv").exists());

    let o = simulate(&["--config", cfg.to_str().unwrap(), "--seed", "6"]);
    assert!(o.status.success());
    assert_ne!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn unknown_preset_lists_valid_names() {
    let o = simulate(&["--preset", "fig99"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("fig99") && err.contains("fig2") && err.contains("fig7c"), "{err}");
    let o = simulate(&["--list-presets"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 8);
}

#[test]
fn invalid_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let (cfg, _) = config_file(dir.path(), "bad", serde_json::json!({"mode": "ness", "params": {"L": 2, "kappa": -1.0}}));
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.kappa"), "{}", stderr(&o));
    let (cfg, _) = config_file(dir.path(), "noaxis", serde_json::json!({"mode": "sweep", "params": {"L": 2}}));
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep_axis"));
    let o = simulate(&["--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oversized_point_fails_alone_with_a_manifest() {
    let dir = TempDir::new().unwrap();
    let (cfg, out) = config_file(
        dir.path(),
        "partial",
        serde_json::json!({"mode": "ness", "params": {"L": 2}, "sweep_axis": {"name": "L", "values": [2.0, 16.0]}}),
    );
    let o = simulate(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("trajectory"), "{}", stderr(&o));
    let t = Table::read(&out);
    let l: Vec<&str> = t.rows.iter().map(|r| r[t.col("L")].as_str()).collect();
    assert!(l.iter().all(|&v| v == "2") && !l.is_empty());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("partial.csv.failures.json")).unwrap()).unwrap();
    let failures = manifest["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["point"]["L"], 16);
    assert_eq!(failures[0]["exit_code"], 4);
}
