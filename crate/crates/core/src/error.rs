use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One rung of the adaptive Fock-cutoff schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffTrial {
    pub fock_dim: usize,
    pub photon_number: f64,
    pub top_fock_population: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site {site} is outside 1..={num_spins}")]
    SiteOutOfRange { site: usize, num_spins: usize },

    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },

    #[error("{what} needs {required} but the budget allows {budget}")]
    SizeBudget { what: &'static str, required: usize, budget: usize },

    #[error("Fock cutoff {next} would exceed the budget before convergence; trend: {}", format_trend(.trend))]
    CutoffBudget { next: usize, trend: Vec<CutoffTrial> },

    #[error("steady state is not unique (smallest singular value estimate {probe:.3e} of the bordered Liouvillian)")]
    DegenerateSteadyState { probe: f64 },

    #[error("solver did not reach residual {target:.3e} (achieved {residual:.3e} after {iterations} iterations)")]
    Convergence { residual: f64, target: f64, iterations: usize },

    #[error("{0} is undefined for these inputs")]
    UndefinedStatistic(&'static str),

    #[error("time step too large at t = {time}: {detail}")]
    StepSize { time: f64, detail: String },

    #[error("Fock window leaked weight {weight:.3e} at t = {time}")]
    WindowLeak { time: f64, weight: f64 },

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

fn format_trend(trend: &[CutoffTrial]) -> String {
    trend
        .iter()
        .map(|t| format!("n_max={} <n>={:.6} p_top={:.2e}", t.fock_dim, t.photon_number, t.top_fock_population))
        .collect::<Vec<_>>()
        .join("; ")
}
