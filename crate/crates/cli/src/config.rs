//! Run configuration read from JSON.

use serde::{Deserialize, Serialize};
use xxz_laser::observables::MAX_DIAGONALIZED_SPINS;
use xxz_laser::trajectories::{Schedule, Unraveling};
use xxz_laser::SystemParams;

use crate::CliError;

/// Version of the configuration and table layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact steady state at one point (or along an optional axis).
    Ness,
    /// Ensemble estimates from stochastic trajectories.
    Trajectory,
    /// Exact steady states along the sweep axis.
    Sweep,
    /// Eigenstate decomposition of the emitter state.
    Spectrum,
    /// Exact `Z_m Z_l` correlations from the reference site.
    Correlations,
    /// Photon output compared with the reference lasers.
    Cooperativity,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ness => "ness",
            Mode::Trajectory => "trajectory",
            Mode::Sweep => "sweep",
            Mode::Spectrum => "spectrum",
            Mode::Correlations => "correlations",
            Mode::Cooperativity => "cooperativity",
        }
    }
}

/// Physical parameters in units of `J`. Leaving out `n_max` selects the
/// adaptive Fock cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(rename = "L")]
    pub num_spins: usize,
    #[serde(rename = "J", default = "one")]
    pub hopping: f64,
    #[serde(rename = "U", default = "one")]
    pub interaction: f64,
    #[serde(rename = "g", default = "figure_coupling")]
    pub coupling: f64,
    #[serde(rename = "P", default = "one")]
    pub pump: f64,
    #[serde(rename = "kappa", default = "figure_loss")]
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn figure_coupling() -> f64 {
    SystemParams::FIGURE_COUPLING
}

fn figure_loss() -> f64 {
    SystemParams::FIGURE_LOSS
}

impl ParamsConfig {
    pub fn figure(num_spins: usize, interaction: f64, pump: f64) -> Self {
        Self {
            num_spins,
            hopping: 1.0,
            interaction,
            coupling: SystemParams::FIGURE_COUPLING,
            pump,
            loss: SystemParams::FIGURE_LOSS,
            n_max: None,
        }
    }

    /// Core parameters; the cutoff is `n_max` or the first adaptive one.
    pub fn system(&self) -> SystemParams {
        SystemParams::figure_defaults(self.num_spins, self.interaction, self.pump)
            .with_coupling(self.coupling)
            .with_loss(self.loss)
            .with_fock_dim(self.n_max.unwrap_or(self.num_spins + 2))
            .with_hopping(self.hopping)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    P,
    U,
    L,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: Axis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub num_trajectories: usize,
    pub base_seed: u64,
    /// Defaults to [`Schedule::default_for`] at each grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub unraveling: Unraveling,
    /// Write the jump record of the first `event_logs` trajectories of each point.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub event_logs: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mode: Mode,
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    pub output_path: String,
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), reason: reason.into() }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Grid points in ascending axis order, or the single base point.
    pub fn points(&self) -> Vec<ParamsConfig> {
        let Some(axis) = &self.sweep_axis else {
            return vec![self.params];
        };
        let mut values = axis.values.clone();
        values.sort_by(f64::total_cmp);
        values
            .into_iter()
            .map(|v| {
                let mut p = self.params;
                match axis.name {
                    Axis::P => p.pump = v,
                    Axis::U => p.interaction = v,
                    Axis::L => p.num_spins = v as usize,
                }
                p
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, got {}", self.schema_version)));
        }
        if self.output_path.trim().is_empty() {
            return Err(invalid("output_path", "must not be empty"));
        }
        if let Some(axis) = &self.sweep_axis {
            if axis.values.is_empty() {
                return Err(invalid("sweep_axis.values", "must not be empty"));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                return Err(invalid("sweep_axis.values", format!("{v} is not finite")));
            }
            if axis.name == Axis::L {
                if let Some(v) = axis.values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                    return Err(invalid("sweep_axis.values", format!("L must be a positive integer, got {v}")));
                }
            }
        } else if self.mode == Mode::Sweep {
            return Err(invalid("sweep_axis", "mode sweep needs an axis"));
        }
        if !(self.params.hopping > 0.0) {
            return Err(invalid("params.J", "the energy unit J must be positive"));
        }
        for point in self.points() {
            point.system().validate().map_err(|e| invalid(&format!("params.{}", parameter_field(&e)), e.to_string()))?;
            if point.n_max == Some(0) {
                return Err(invalid("params.n_max", "must be at least 1"));
            }
            if self.mode == Mode::Spectrum && point.num_spins > MAX_DIAGONALIZED_SPINS {
                return Err(invalid("params.L", format!("spectrum mode handles at most {MAX_DIAGONALIZED_SPINS} spins")));
            }
        }
        match (&self.ensemble, self.mode) {
            (None, Mode::Trajectory) => return Err(invalid("ensemble", "mode trajectory needs an ensemble block")),
            (Some(e), _) => {
                if e.num_trajectories < 2 {
                    return Err(invalid("ensemble.num_trajectories", "at least two trajectories are needed"));
                }
                if let Some(s) = &e.schedule {
                    s.validate().map_err(|err| invalid("ensemble.schedule", err.to_string()))?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn parameter_field(e: &xxz_laser::Error) -> &'static str {
    match e {
        xxz_laser::Error::InvalidParameter { name, .. } => name,
        _ => "L",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            mode: Mode::Ness,
            params: ParamsConfig::figure(2, 1.0, 1.0),
            sweep_axis: None,
            ensemble: None,
            output_path: "out.csv".into(),
        }
    }

    #[test]
    fn minimal_json_takes_figure_defaults() {
        let c = RunConfig::from_json(r#"{"schema_version":1,"mode":"ness","params":{"L":3},"output_path":"x.csv"}"#).unwrap();
        assert_eq!(c.params, ParamsConfig::figure(3, 1.0, 1.0));
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&json).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let field = |c: RunConfig| match c.validate().unwrap_err() {
            CliError::Config { field, .. } => field,
            e => panic!("{e}"),
        };
        assert_eq!(field(RunConfig { schema_version: 7, ..base() }), "schema_version");
        assert_eq!(field(RunConfig { mode: Mode::Sweep, ..base() }), "sweep_axis");
        assert_eq!(field(RunConfig { mode: Mode::Trajectory, ..base() }), "ensemble");
        let mut c = base();
        c.params.pump = -1.0;
        assert_eq!(field(c), "params.P");
        let mut c = base();
        c.sweep_axis = Some(SweepAxis { name: Axis::L, values: vec![2.0, 2.5] });
        assert_eq!(field(c), "sweep_axis.values");
        let err = RunConfig::from_json(r#"{"schema_version":1,"mode":"ness","params":{"L":3,"bogus":1},"output_path":"x"}"#);
        assert!(err.unwrap_err().to_string().contains("bogus"));
    }

    #[test]
    fn points_are_sorted_along_the_axis() {
        let mut c = base();
        c.sweep_axis = Some(SweepAxis { name: Axis::U, values: vec![2.0, 0.5, 1.0] });
        let u: Vec<f64> = c.points().iter().map(|p| p.interaction).collect();
        assert_eq!(u, [0.5, 1.0, 2.0]);
    }
}
