//! Flows perturbed by a Lipschitz operator, solved by Picard iteration over
//! whole trajectories in the norm `sup_t e^{-ωt} ‖·‖`.

use super::{march, FlowError, ProblemSpec, SolverConfig, Source, Trajectory};
use crate::convex::{yosida, Functional};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::sync::Arc;

/// `B : H → H` with `‖B(x) - B(y)‖ ≤ L_B ‖x - y‖`.
pub trait LipschitzOperator: Debug + Send + Sync {
    fn apply(&self, w: &[f64], out: &mut [f64]);
    fn lipschitz_constant(&self) -> f64;
}

/// `B(w) = c·w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOperator {
    pub factor: f64,
}

impl LipschitzOperator for LinearOperator {
    fn apply(&self, w: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(w) {
            *o = self.factor * x;
        }
    }

    fn lipschitz_constant(&self) -> f64 {
        self.factor.abs()
    }
}

/// `B = -A_λ` for the Yosida approximation of a convex functional, so that
/// the perturbed flow reproduces the regularized difference-of-convex flow.
#[derive(Debug, Clone)]
pub struct ReactionOperator {
    pub functional: Arc<dyn Functional>,
    pub lambda: f64,
    pub tol: f64,
}

impl LipschitzOperator for ReactionOperator {
    fn apply(&self, w: &[f64], out: &mut [f64]) {
        let y = yosida(self.functional.as_ref(), self.lambda, w, self.tol)
            .expect("Yosida evaluation of a validated functional");
        for (o, a) in out.iter_mut().zip(&y.yosida) {
            *o = -a;
        }
    }

    fn lipschitz_constant(&self) -> f64 {
        1.0 / self.lambda
    }
}

#[derive(Debug, Clone)]
pub struct LipschitzPerturbation {
    pub operator: Arc<dyn LipschitzOperator>,
    /// Exponential weight `ω` of the trajectory norm.
    pub weight: f64,
    pub max_iterations: usize,
    /// Allowed excess of a measured ratio over `κ`.
    pub ratio_slack: f64,
}

impl LipschitzPerturbation {
    pub fn new(operator: Arc<dyn LipschitzOperator>, weight: f64) -> Self {
        Self {
            operator,
            weight,
            max_iterations: 200,
            ratio_slack: 1e-2,
        }
    }

    /// `κ = L_B / (ω λ_v)`.
    pub fn kappa(&self, viscosity: f64) -> f64 {
        self.operator.lipschitz_constant() / (self.weight * viscosity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardLog {
    pub kappa: f64,
    /// Weighted distance between consecutive iterates.
    pub distances: Vec<f64>,
    /// Ratios of consecutive distances, recorded while the earlier distance
    /// sits above the rounding floor.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Every ratio stayed within `κ + slack`.
    pub geometric: bool,
    pub converged: bool,
}

fn weighted_distance(a: &Trajectory, b: &Trajectory, weight: f64) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .enumerate()
        .map(|(j, (x, y))| (-weight * a.grid.time(j)).exp() * a.space.dist(x, y))
        .fold(0.0, f64::max)
}

/// Solves `ℬ(u - u₀) + λ_v u' + ∂φ¹(u) + B(u) ∋ f`. The reaction of `spec`
/// is ignored.
///
/// With positive viscosity the operator is frozen along the previous
/// iterate and the whole trajectory is recomputed until the weighted
/// distance stalls; each ratio is checked against `κ`. Without viscosity
/// the operator is evaluated at the previous node and no iteration runs.
pub fn solve_lipschitz_perturbed(
    spec: &ProblemSpec,
    config: &SolverConfig,
    pert: &LipschitzPerturbation,
) -> Result<(Trajectory, PicardLog), FlowError> {
    let op = pert.operator.as_ref();
    if config.viscosity == 0.0 {
        let traj = march(spec, config, Source::SemiImplicitOperator(op))?;
        let log = PicardLog {
            kappa: f64::NAN,
            distances: Vec::new(),
            ratios: Vec::new(),
            max_ratio: 0.0,
            geometric: true,
            converged: true,
        };
        return Ok((traj, log));
    }
    if !(pert.weight > 0.0) {
        return Err(FlowError::InvalidConfig("weight ω must be positive".into()));
    }
    let kappa = pert.kappa(config.viscosity);
    if !(kappa < 1.0) {
        return Err(FlowError::ContractionTooWeak { kappa });
    }

    let initial_path = vec![spec.initial.clone(); spec.grid.nodes()];
    let mut current = march(spec, config, Source::FrozenOperator(op, &initial_path))?;
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    for _ in 0..pert.max_iterations {
        if !current.completed() {
            break;
        }
        let next = march(spec, config, Source::FrozenOperator(op, &current.states))?;
        let dist = weighted_distance(&next, &current, pert.weight);
        let scale = current.states.iter().map(|u| current.space.norm(u)).fold(1.0, f64::max);
        let floor = 1e3 * config.inner_tol * scale;
        if let Some(prev) = distances.last().copied() {
            if prev > floor {
                ratios.push(dist / prev);
            }
        }
        distances.push(dist);
        current = next;
        if dist <= 10.0 * f64::EPSILON * scale || (dist <= floor && distances.len() > 1) {
            converged = true;
            break;
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let log = PicardLog {
        kappa,
        geometric: max_ratio <= kappa + pert.ratio_slack,
        distances,
        ratios,
        max_ratio,
        converged,
    };
    Ok((current, log))
}
