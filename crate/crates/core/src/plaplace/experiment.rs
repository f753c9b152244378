//! Blow-up and global-existence runs for
//! `∂_t^α(u - u₀) - Δ_p u - |u|^{q-2}u = f` on the unit interval or square.

use super::grid::{dirichlet_p_energy, q_potential, Grid, GridError};
use super::regime::{classify_regime, Verdict};
use crate::flow::{solve_dc_flow, FlowError, ProblemSpec, SolverConfig, Trajectory};
use crate::kernel::{rl_pair, KernelError, TimeGrid};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("bisection premise fails: {0}")]
    Premise(String),
}

/// Spatial profile for initial data and forcing.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `A · Π sin(π xᵢ)`.
    SineBump {
        amplitude: f64,
    },
    /// `A` at every interior point, dropping to the zero boundary values.
    Plateau {
        amplitude: f64,
    },
}

impl Profile {
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        match *self {
            Profile::Zero => vec![0.0; grid.len()],
            Profile::SineBump { amplitude } => grid.sine_bump(amplitude),
            Profile::Plateau { amplitude } => vec![amplitude; grid.len()],
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::SineBump { amplitude } | Profile::Plateau { amplitude } => amplitude,
        }
    }

    /// The same shape at a new amplitude; `None` for the zero profile.
    pub fn with_amplitude(&self, amplitude: f64) -> Option<Profile> {
        match self {
            Profile::Zero => None,
            Profile::SineBump { .. } => Some(Profile::SineBump { amplitude }),
            Profile::Plateau { .. } => Some(Profile::Plateau { amplitude }),
        }
    }
}

fn default_dim() -> usize {
    1
}

/// One p-Laplace experiment. The forcing is constant in time.
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// Simulation grid dimension, 1 or 2.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Interior points per axis.
    pub m: usize,
    /// Dimension used for the exponent arithmetic; defaults to `dim`.
    #[serde(default)]
    pub pde_dim: Option<u32>,
    pub initial: Profile,
    #[serde(default = "zero_profile")]
    pub forcing: Profile,
    pub horizon: f64,
    pub steps: usize,
}

fn zero_profile() -> Profile {
    Profile::Zero
}

impl PdeConfig {
    pub fn grid(&self) -> Result<Grid, GridError> {
        Grid::new(self.dim, self.m)
    }

    pub fn time_grid(&self) -> Result<TimeGrid, KernelError> {
        TimeGrid::new(self.horizon, self.steps)
    }

    pub fn regime_dim(&self) -> u32 {
        self.pde_dim.unwrap_or(self.dim as u32)
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Option<PdeConfig> {
        self.initial
            .with_amplitude(amplitude)
            .map(|initial| PdeConfig { initial, ..*self })
    }

    pub fn with_m(&self, m: usize) -> PdeConfig {
        PdeConfig { m, ..*self }
    }

    /// Assembles `φ¹ = (1/p)‖∇u‖_p^p`, `φ² = (1/q)‖u‖_q^q` and the RL pair.
    pub fn problem(&self) -> Result<ProblemSpec, ExperimentError> {
        if self.regime_dim() == 0 {
            return Err(ExperimentError::Invalid("pde_dim must be at least 1".into()));
        }
        let grid = self.grid()?;
        let time = self.time_grid()?;
        let pair = rl_pair(self.alpha)?;
        let energy = dirichlet_p_energy(&grid, self.p)?;
        let reaction = q_potential(&grid, self.q)?;
        let initial = self.initial.sample(&grid);
        let forcing = match self.forcing {
            Profile::Zero => Vec::new(),
            f => vec![f.sample(&grid); time.nodes()],
        };
        if initial.iter().chain(forcing.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(ExperimentError::Invalid("profiles must be finite".into()));
        }
        Ok(ProblemSpec::new(Arc::new(energy), Arc::new(reaction), pair, initial, time).with_forcing(forcing))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlewUp,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlewUp => "blew_up",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub m: usize,
    pub steps: usize,
    pub amplitude: f64,
    pub regime: Verdict,
    pub status: RunStatus,
    /// Last accepted time before a threshold crossing; the crossing lies
    /// within one step after it.
    pub blowup_time: Option<f64>,
    pub time_step: f64,
    /// `max_j φ¹(u_j)` over accepted nodes.
    pub max_energy: f64,
    /// `E_T = φ¹(u₀) + max_j (ℓ * ‖f‖²)(t_j)`.
    pub energy_bound: f64,
    /// `max φ¹ / E_T`, when `E_T > 0`.
    pub energy_ratio: Option<f64>,
}

impl ExperimentResult {
    pub const CSV_HEADER: [&'static str; 11] = [
        "p",
        "q",
        "alpha",
        "m",
        "N",
        "amplitude",
        "verdict",
        "t_star",
        "sup_energy",
        "energy_bound",
        "energy_ratio",
    ];

    pub fn blew_up(&self) -> bool {
        self.status == RunStatus::BlewUp
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let float = crate::io::format_float;
        let opt = |v: Option<f64>| v.map(float).unwrap_or_default();
        vec![
            float(self.p),
            float(self.q),
            float(self.alpha),
            self.m.to_string(),
            self.steps.to_string(),
            float(self.amplitude),
            self.status.as_str().to_string(),
            opt(self.blowup_time),
            float(self.max_energy),
            float(self.energy_bound),
            opt(self.energy_ratio),
        ]
    }
}

pub fn solve_experiment(pde: &PdeConfig, config: &SolverConfig) -> Result<Trajectory, ExperimentError> {
    let spec = pde.problem()?;
    Ok(solve_dc_flow(&spec, config)?)
}

pub fn summarize(pde: &PdeConfig, traj: &Trajectory) -> ExperimentResult {
    let report = classify_regime(pde.p, pde.q, pde.regime_dim());
    let max_energy = traj.max_energy();
    let energy_bound = traj.energy_bound;
    ExperimentResult {
        p: pde.p,
        q: pde.q,
        alpha: pde.alpha,
        m: pde.m,
        steps: pde.steps,
        amplitude: pde.initial.amplitude(),
        regime: report.verdict,
        status: if traj.completed() {
            RunStatus::Completed
        } else {
            RunStatus::BlewUp
        },
        blowup_time: traj.blow_up().map(|r| r.time),
        time_step: traj.grid.tau(),
        max_energy,
        energy_bound,
        energy_ratio: (energy_bound > 0.0).then(|| max_energy / energy_bound),
    }
}

pub fn run_experiment(pde: &PdeConfig, config: &SolverConfig) -> Result<ExperimentResult, ExperimentError> {
    let traj = solve_experiment(pde, config)?;
    Ok(summarize(pde, &traj))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBracket {
    /// Largest amplitude seen to complete.
    pub lower: f64,
    /// Smallest amplitude seen to blow up.
    pub upper: f64,
    pub lower_run: ExperimentResult,
    pub upper_run: ExperimentResult,
    pub runs: usize,
    /// Whether `upper/lower` reached the requested ratio within budget.
    pub converged: bool,
    /// Discretization the bracket belongs to.
    pub tag: String,
}

/// Geometric bisection on the initial amplitude between a completing
/// `lower` and a blowing-up `upper`, until `upper/lower ≤ ratio` or
/// `budget` runs have been spent.
pub fn amplitude_bisection(
    template: &PdeConfig,
    config: &SolverConfig,
    lower: f64,
    upper: f64,
    ratio: f64,
    budget: usize,
) -> Result<AmplitudeBracket, ExperimentError> {
    if !(lower > 0.0 && upper.is_finite() && ratio > 1.0) {
        return Err(ExperimentError::Invalid(
            "amplitudes must be positive and the ratio above 1".into(),
        ));
    }
    let run = |a: f64| -> Result<ExperimentResult, ExperimentError> {
        let pde = template
            .with_amplitude(a)
            .ok_or_else(|| ExperimentError::Invalid("zero initial profile has no amplitude".into()))?;
        run_experiment(&pde, config)
    };
    let mut lo_run = run(lower)?;
    let mut hi_run = if upper == lower { lo_run.clone() } else { run(upper)? };
    let mut runs = if upper == lower { 1 } else { 2 };
    match (lo_run.blew_up(), hi_run.blew_up()) {
        (false, true) => {}
        (false, false) => return Err(ExperimentError::Premise(format!("both {lower} and {upper} complete"))),
        (true, true) => return Err(ExperimentError::Premise(format!("both {lower} and {upper} blow up"))),
        (true, false) => {
            return Err(ExperimentError::Premise(format!(
                "{lower} blows up while {upper} completes"
            )))
        }
    }
    let (mut lo, mut hi) = (lower, upper);
    while hi / lo > ratio && runs < budget {
        let mid = (lo * hi).sqrt();
        let r = run(mid)?;
        runs += 1;
        if r.blew_up() {
            hi = mid;
            hi_run = r;
        } else {
            lo = mid;
            lo_run = r;
        }
    }
    Ok(AmplitudeBracket {
        lower: lo,
        upper: hi,
        lower_run: lo_run,
        upper_run: hi_run,
        runs,
        converged: hi / lo <= ratio,
        tag: format!(
            "d={} m={} N={} T={}",
            template.dim, template.m, template.steps, template.horizon
        ),
    })
}
