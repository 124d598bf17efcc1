//! Long-format result table: one row per grid point and observable.
//!
//! The file starts with `#` metadata lines followed by a CSV header. Parameters
//! other than `J` itself are divided by `J`, as the column names say.

use std::io::Write;

use serde::Serialize;
use xxz_laser::NessDiagnostics;

use crate::config::ParamsConfig;

pub const COLUMNS: [&str; 20] = [
    "L",
    "J",
    "U/J",
    "g/J",
    "P/J",
    "kappa/J",
    "n_max",
    "observable",
    "label",
    "value",
    "standard_error",
    "method",
    "flags",
    "energy/J",
    "magnetization",
    "bright",
    "residual_norm",
    "trace_error",
    "min_eigenvalue",
    "top_fock_population",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Jump,
    Diffusive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Jump => "jump",
            Method::Diffusive => "diffusive",
        }
    }
}

/// Solver health carried by exact rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowDiagnostics {
    pub residual_norm: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub top_fock_population: f64,
}

impl From<&NessDiagnostics> for RowDiagnostics {
    fn from(d: &NessDiagnostics) -> Self {
        Self {
            residual_norm: d.residual_norm,
            trace_error: d.trace_error,
            min_eigenvalue: d.min_eigenvalue,
            top_fock_population: d.top_fock_population,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Grid point; `n_max` is the cutoff actually used, `None` for the jump window.
    pub point: ParamsConfig,
    pub observable: String,
    pub label: String,
    /// `None` for undefined statistics, written as an empty field.
    pub value: Option<f64>,
    pub standard_error: f64,
    pub method: Method,
    pub flags: Vec<String>,
    pub energy: Option<f64>,
    pub magnetization: Option<i32>,
    pub bright: Option<bool>,
    pub diagnostics: Option<RowDiagnostics>,
}

impl Row {
    pub fn exact(point: ParamsConfig, observable: impl Into<String>, value: f64, diagnostics: RowDiagnostics) -> Self {
        Self {
            point,
            observable: observable.into(),
            label: String::new(),
            value: Some(value),
            standard_error: 0.0,
            method: Method::Exact,
            flags: Vec::new(),
            energy: None,
            magnetization: None,
            bright: None,
            diagnostics: Some(diagnostics),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_flags(mut self, flags: &[String]) -> Self {
        self.flags.extend_from_slice(flags);
        self
    }

    /// Marks the value as undefined.
    pub fn undefined(mut self) -> Self {
        self.value = None;
        self.flags.push("undefined".into());
        self
    }

    fn fields(&self) -> Vec<String> {
        let p = &self.point;
        let j = p.hopping;
        let num = format_number;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        let diag = self.diagnostics;
        vec![
            p.num_spins.to_string(),
            num(j),
            num(p.interaction / j),
            num(p.coupling / j),
            num(p.pump / j),
            num(p.loss / j),
            p.n_max.map(|n| n.to_string()).unwrap_or_default(),
            self.observable.clone(),
            self.label.clone(),
            opt(self.value),
            num(self.standard_error),
            self.method.as_str().to_string(),
            self.flags.join(";"),
            opt(self.energy.map(|e| e / j)),
            self.magnetization.map(|m| m.to_string()).unwrap_or_default(),
            self.bright.map(|b| b.to_string()).unwrap_or_default(),
            opt(diag.map(|d| d.residual_norm)),
            opt(diag.map(|d| d.trace_error)),
            opt(diag.map(|d| d.min_eigenvalue)),
            opt(diag.map(|d| d.top_fock_population)),
        ]
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes.
fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e16).contains(&v.abs()) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// `# key: value` lines written above the column header.
pub struct Metadata<'a> {
    pub schema_version: u32,
    pub config_sha256: &'a str,
    pub code_version: &'a str,
    pub mode: &'a str,
}

pub fn render(meta: &Metadata, rows: &[Row]) -> std::io::Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# schema_version: {}", meta.schema_version)?;
    writeln!(out, "# config_sha256: {}", meta.config_sha256)?;
    writeln!(out, "# code_version: xxz-laser {}", meta.code_version)?;
    writeln!(out, "# mode: {}", meta.mode)?;
    writeln!(out, "# units: energies and rates divided by J; standard_error is 0 for exact rows")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(COLUMNS)?;
        for row in rows {
            w.write_record(row.fields())?;
        }
        w.flush()?;
    }
    Ok(out)
}
