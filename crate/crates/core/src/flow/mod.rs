//! Time stepping for `d/dt[k * (u - u₀)] + λ_v u' + ∂φ¹(u) - ∂φ²_λ(u) ∋ f`.
//!
//! The nonlocal derivative is discretized by a backward difference of the
//! product-integrated convolution. With `a_m = K((m+1)τ) - K(mτ)` and
//! `v = u - u₀` this reads
//!
//! ```text
//! ℬ_j = (a₀ v_j + Σ_{i<j} (a_{j-i} - a_{j-1-i}) v_i) / τ
//! ```
//!
//! so each step is one resolvent of `φ¹` with parameter
//! `μ = 1/(a₀/τ + λ_v/τ)`.

mod lipschitz;
mod modulus;

pub use lipschitz::{
    solve_lipschitz_perturbed, LinearOperator, LipschitzOperator, LipschitzPerturbation, PicardLog, ReactionOperator,
};
pub use modulus::{continuity_modulus, ModulusRow, ModulusTable};

use crate::convex::{yosida, ConvexError, Functional};
use crate::kernel::{convolve, ConvWeights, KernelError, SoninePair, TimeGrid};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error("resolvent failed at node {node} with bounded state (residual {residual:e})")]
    InnerNonConvergence { node: usize, residual: f64 },
    #[error("coupled iteration diverged at node {node}")]
    CoupledDivergence { node: usize },
    #[error("contraction factor {kappa} is not below 1")]
    ContractionTooWeak { kappa: f64 },
}

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `∂φ²_λ` evaluated at the previous node.
    #[default]
    SemiImplicit,
    /// `∂φ²_λ` evaluated at the new node through an inner fixed point.
    Coupled,
}

#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Yosida parameter for `φ²`.
    pub yosida_lambda: f64,
    /// Coefficient of the added `u'` term; 0 disables it.
    pub viscosity: f64,
    pub inner_tol: f64,
    /// Iteration cap of the coupled inner fixed point.
    pub max_inner_iter: usize,
    pub blowup_norm: f64,
    pub blowup_energy: f64,
    pub coupling: Coupling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            yosida_lambda: 1e-3,
            viscosity: 0.0,
            inner_tol: 1e-10,
            max_inner_iter: 50,
            blowup_norm: 1e6,
            blowup_energy: 1e12,
            coupling: Coupling::SemiImplicit,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |msg: String| Err(FlowError::InvalidConfig(msg));
        if !(self.yosida_lambda.is_finite() && self.yosida_lambda > 0.0) {
            return bad(format!("yosida_lambda must be positive, got {}", self.yosida_lambda));
        }
        if !(self.viscosity.is_finite() && self.viscosity >= 0.0) {
            return bad(format!("viscosity must be nonnegative, got {}", self.viscosity));
        }
        if !(self.inner_tol.is_finite() && self.inner_tol > 0.0) {
            return bad(format!("inner_tol must be positive, got {}", self.inner_tol));
        }
        if self.max_inner_iter == 0 {
            return bad("max_inner_iter must be at least 1".into());
        }
        if !(self.blowup_norm > 0.0 && self.blowup_energy > 0.0) {
            return bad("blow-up thresholds must be positive".into());
        }
        Ok(())
    }
}

/// Problem data. `energy` is `φ¹`, `reaction` is the subtracted `φ²`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub energy: Arc<dyn Functional>,
    pub reaction: Arc<dyn Functional>,
    pub pair: SoninePair,
    pub initial: Vec<f64>,
    /// Forcing at every node; empty means `f ≡ 0`.
    pub forcing: Vec<Vec<f64>>,
    pub grid: TimeGrid,
}

impl ProblemSpec {
    pub fn new(
        energy: Arc<dyn Functional>,
        reaction: Arc<dyn Functional>,
        pair: SoninePair,
        initial: Vec<f64>,
        grid: TimeGrid,
    ) -> Self {
        Self {
            energy,
            reaction,
            pair,
            initial,
            forcing: Vec::new(),
            grid,
        }
    }

    pub fn with_forcing(mut self, forcing: Vec<Vec<f64>>) -> Self {
        self.forcing = forcing;
        self
    }

    pub fn dim(&self) -> usize {
        self.energy.space().dim
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let space = self.energy.space();
        if self.reaction.space() != space {
            return Err(FlowError::InvalidSpec(
                "energy and reaction live on different spaces".into(),
            ));
        }
        space.check(&self.initial)?;
        if !self.energy.in_domain(&self.initial) {
            return Err(FlowError::InvalidSpec("initial state outside the energy domain".into()));
        }
        if !self.forcing.is_empty() {
            self.grid.check_path(self.forcing.len())?;
            for row in &self.forcing {
                space.check(row)?;
            }
        }
        self.pair.k.validate()?;
        self.pair.l.validate()?;
        Ok(())
    }

    pub fn forcing_at(&self, j: usize) -> Option<&[f64]> {
        self.forcing.get(j).map(Vec::as_slice)
    }

    /// `φ¹(u₀) + max_j (ℓ * ‖f‖²)(t_j)`.
    pub fn energy_bound(&self) -> f64 {
        let base = self.energy.value(&self.initial);
        if self.forcing.is_empty() {
            return base;
        }
        let space = self.energy.space();
        let sq: Vec<f64> = self.forcing.iter().map(|f| space.norm_sq(f)).collect();
        let conv = convolve(&self.pair.l, &sq, &self.grid).expect("forcing validated");
        base + conv.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDiagnostics {
    pub t: f64,
    pub norm: f64,
    pub sup_norm: f64,
    pub energy: f64,
    pub reaction_envelope: f64,
    /// `‖ℬ_j + λ_v(u_j - u_{j-1})/τ + ∂φ¹(u_j) - η_j - f_j‖`.
    pub residual: f64,
    /// Tolerance the residual was held to at this node.
    pub tolerance: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    /// First node that crossed a threshold.
    pub node: usize,
    /// Time of the last accepted node; the crossing happened within `τ`.
    pub time: f64,
    pub reason: String,
    /// Sup norms of all accepted nodes followed by the rejected one.
    pub growth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FlowOutcome {
    Completed,
    BlewUp(BlowUpReport),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub space: crate::convex::Space,
    pub states: Vec<Vec<f64>>,
    /// Selections `ξ_j ∈ ∂φ¹(u_j)` read off the resolvent.
    pub xi: Vec<Vec<f64>>,
    /// Reaction evaluations `η_j`.
    pub eta: Vec<Vec<f64>>,
    pub forcing: Vec<Vec<f64>>,
    pub diagnostics: Vec<NodeDiagnostics>,
    pub energy_bound: f64,
    pub viscosity: f64,
    pub outcome: FlowOutcome,
}

impl Trajectory {
    /// Wraps bare states, e.g. read from a dump. Selections, reaction terms
    /// and forcing are zero and only the energy-free diagnostics are filled.
    pub fn from_states(grid: TimeGrid, space: crate::convex::Space, states: Vec<Vec<f64>>) -> Self {
        let zero = vec![0.0; space.dim];
        let n = states.len();
        let diagnostics = states
            .iter()
            .enumerate()
            .map(|(j, u)| NodeDiagnostics {
                t: grid.time(j),
                norm: space.norm(u),
                sup_norm: sup_norm(u),
                energy: 0.0,
                reaction_envelope: 0.0,
                residual: 0.0,
                tolerance: 0.0,
                inner_iterations: 0,
            })
            .collect();
        let outcome = if n == grid.nodes() {
            FlowOutcome::Completed
        } else {
            FlowOutcome::BlewUp(BlowUpReport {
                node: n,
                time: grid.time(n - 1),
                reason: "dump ends before the horizon".into(),
                growth: states.iter().map(|u| sup_norm(u)).collect(),
            })
        };
        Self {
            grid,
            space,
            xi: vec![zero.clone(); n],
            eta: vec![zero.clone(); n],
            forcing: vec![zero; n],
            states,
            diagnostics,
            energy_bound: 0.0,
            viscosity: 0.0,
            outcome,
        }
    }

    pub fn blow_up(&self) -> Option<&BlowUpReport> {
        match &self.outcome {
            FlowOutcome::BlewUp(r) => Some(r),
            FlowOutcome::Completed => None,
        }
    }

    pub fn completed(&self) -> bool {
        matches!(self.outcome, FlowOutcome::Completed)
    }

    /// Index of the last accepted node.
    pub fn last_node(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_energy(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ℬ(u - u₀)` at the accepted nodes, recomputed from the states.
    pub fn nonlocal_derivative(&self, pair: &SoninePair) -> Vec<Vec<f64>> {
        let weights = ConvWeights::new(&pair.k, &self.grid);
        let u0 = &self.states[0];
        let shifted: Vec<Vec<f64>> = self
            .states
            .iter()
            .map(|u| u.iter().zip(u0).map(|(a, b)| a - b).collect())
            .collect();
        let mut out = vec![vec![0.0; u0.len()]; self.states.len()];
        for j in 1..self.states.len() {
            let row = derivative_at(&weights, &shifted, j);
            out[j] = row;
        }
        out
    }

    /// `G_j = f_j - ξ_j + η_j`, the right-hand side `ℬ(u - u₀)` equals.
    pub fn balance(&self) -> Vec<Vec<f64>> {
        (0..self.states.len())
            .map(|j| {
                let f = &self.forcing[j];
                f.iter()
                    .zip(&self.xi[j])
                    .zip(&self.eta[j])
                    .map(|((f, x), e)| f - x + e)
                    .collect()
            })
            .collect()
    }

    /// The viscous increments `λ_v (u_j - u_{j-1})/τ`.
    pub fn viscous_term(&self, j: usize) -> Vec<f64> {
        let tau = self.grid.tau();
        if j == 0 || self.viscosity == 0.0 {
            return vec![0.0; self.space.dim];
        }
        self.states[j]
            .iter()
            .zip(&self.states[j - 1])
            .map(|(a, b)| self.viscosity * (a - b) / tau)
            .collect()
    }
}

/// `ℬ_j` from shifted states `v_i = u_i - u₀` (with `v₀ = 0`).
fn derivative_at(weights: &ConvWeights, shifted: &[Vec<f64>], j: usize) -> Vec<f64> {
    let tau = weights.tau();
    let dim = shifted[0].len();
    let mut out: Vec<f64> = shifted[j].iter().map(|v| weights.leading() * v).collect();
    for i in 1..j {
        let c = weights.lag(j - i) - weights.lag(j - 1 - i);
        if c != 0.0 {
            for d in 0..dim {
                out[d] += c * shifted[i][d];
            }
        }
    }
    out.iter_mut().for_each(|v| *v /= tau);
    out
}

/// History part of `ℬ_j`, everything except the `a₀ v_j` term.
fn history_at(weights: &ConvWeights, shifted: &[Vec<f64>], j: usize, out: &mut [f64]) {
    out.fill(0.0);
    for i in 1..j {
        let c = weights.lag(j - i) - weights.lag(j - 1 - i);
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(&shifted[i]) {
                *o += c * v;
            }
        }
    }
    let tau = weights.tau();
    out.iter_mut().for_each(|v| *v /= tau);
}

/// How `η_j` is produced at each node.
pub(crate) enum Source<'a> {
    /// `A_λ(φ²)` at the configured coupling point.
    Reaction,
    /// `-B` evaluated at the previous node.
    SemiImplicitOperator(&'a dyn LipschitzOperator),
    /// `-B` evaluated along a frozen path.
    FrozenOperator(&'a dyn LipschitzOperator, &'a [Vec<f64>]),
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn march(spec: &ProblemSpec, config: &SolverConfig, source: Source<'_>) -> Result<Trajectory, FlowError> {
    spec.validate()?;
    config.validate()?;
    let grid = spec.grid;
    let tau = grid.tau();
    let weights = ConvWeights::new(&spec.pair.k, &grid);
    let a0 = weights.leading();
    let visc = config.viscosity;
    let gamma = (a0 + visc) / tau;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(FlowError::InvalidSpec(
            "kernel and viscosity both vanish; the step is not implicit".into(),
        ));
    }
    // effective resolvent parameter: reciprocal of the leading weight over τ
    let mu = 1.0 / gamma;
    let space = spec.energy.space();
    let dim = space.dim;
    let u0 = spec.initial.clone();
    let lambda = config.yosida_lambda;

    let reaction_eval = |u: &[f64]| -> Result<(Vec<f64>, f64), FlowError> {
        let y = yosida(spec.reaction.as_ref(), lambda, u, config.inner_tol * lambda)?;
        Ok((y.yosida, y.envelope))
    };
    let operator_eval = |op: &dyn LipschitzOperator, u: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        op.apply(u, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        out
    };

    let zero = vec![0.0; dim];
    let mut states = vec![u0.clone()];
    let mut shifted = vec![vec![0.0; dim]];
    let mut xi0 = vec![0.0; dim];
    spec.energy.subgradient(&u0, &mut xi0);
    let (eta0, env0) = match &source {
        Source::Reaction => reaction_eval(&u0)?,
        Source::SemiImplicitOperator(op) => (operator_eval(*op, &u0), 0.0),
        Source::FrozenOperator(op, path) => (operator_eval(*op, &path[0]), 0.0),
    };
    let mut xi = vec![xi0];
    let mut eta = vec![eta0];
    let mut diagnostics = vec![NodeDiagnostics {
        t: 0.0,
        norm: space.norm(&u0),
        sup_norm: sup_norm(&u0),
        energy: spec.energy.value(&u0),
        reaction_envelope: env0,
        residual: 0.0,
        tolerance: config.inner_tol,
        inner_iterations: 0,
    }];
    let mut growth = vec![sup_norm(&u0)];
    let mut history = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut outcome = FlowOutcome::Completed;

    for j in 1..grid.nodes() {
        history_at(&weights, &shifted, j, &mut history);
        let f = spec.forcing_at(j).unwrap_or(&zero);
        let prev = &states[j - 1];
        // w = μ [f + η + (a₀/τ) u₀ - hist + (λ_v/τ) u_{j-1}]
        let base: Vec<f64> = (0..dim)
            .map(|d| f[d] + (a0 / tau) * u0[d] - history[d] + (visc / tau) * prev[d])
            .collect();

        let solve = |eta: &[f64]| -> (Vec<f64>, Result<crate::convex::Prox, ConvexError>, f64) {
            let w: Vec<f64> = base.iter().zip(eta).map(|(b, e)| mu * (b + e)).collect();
            let tol = config.inner_tol * (space.norm(&w) / mu).max(1.0);
            let prox = if w.iter().all(|v| v.is_finite()) {
                spec.energy.resolvent(mu, &w, tol)
            } else {
                Err(ConvexError::NotFinite)
            };
            (w, prox, tol)
        };

        let mut step_eta = match &source {
            Source::Reaction => reaction_eval(prev)?.0,
            Source::SemiImplicitOperator(op) => operator_eval(*op, prev),
            Source::FrozenOperator(op, path) => operator_eval(*op, &path[j]),
        };
        let (mut w, mut prox, mut tol) = solve(&step_eta);
        let mut iterations = prox.as_ref().map_or(0, |p| p.iterations);

        if matches!(source, Source::Reaction) && config.coupling == Coupling::Coupled {
            let mut last_inc = f64::INFINITY;
            let mut growing = 0;
            let mut converged = false;
            for _ in 0..config.max_inner_iter {
                let Ok(p) = &prox else { break };
                let candidate = p.point.clone();
                let next_eta = reaction_eval(&candidate)?.0;
                let (w2, prox2, tol2) = solve(&next_eta);
                let Ok(p2) = &prox2 else {
                    prox = prox2;
                    break;
                };
                let inc = space.dist(&p2.point, &candidate);
                iterations += p2.iterations;
                step_eta = next_eta;
                w = w2;
                tol = tol2;
                let scale = space.norm(&p2.point).max(1.0);
                prox = prox2;
                if inc <= config.inner_tol * scale {
                    converged = true;
                    break;
                }
                if inc > last_inc {
                    growing += 1;
                    if growing >= 3 {
                        break;
                    }
                } else {
                    growing = 0;
                }
                last_inc = inc;
            }
            if prox.is_ok() && !converged {
                if sup_norm(&w) > config.blowup_norm {
                    growth.push(sup_norm(&w));
                    outcome = FlowOutcome::BlewUp(BlowUpReport {
                        node: j,
                        time: grid.time(j - 1),
                        reason: "coupled iteration diverged at large amplitude".into(),
                        growth,
                    });
                    break;
                }
                return Err(FlowError::CoupledDivergence { node: j });
            }
        }

        let prox = match prox {
            Ok(p) => p,
            Err(err) => {
                let size = sup_norm(&w);
                if !(size <= config.blowup_norm) {
                    growth.push(size);
                    outcome = FlowOutcome::BlewUp(BlowUpReport {
                        node: j,
                        time: grid.time(j - 1),
                        reason: format!("resolvent failed at large amplitude: {err}"),
                        growth,
                    });
                    break;
                }
                let residual = match err {
                    ConvexError::NonConvergence { residual, .. } => residual,
                    _ => f64::NAN,
                };
                return Err(FlowError::InnerNonConvergence { node: j, residual });
            }
        };

        let u = prox.point;
        let size = sup_norm(&u);
        let energy = spec.energy.value(&u);
        if !(size <= config.blowup_norm) || !(energy <= config.blowup_energy) {
            growth.push(size);
            let reason = if !(size <= config.blowup_norm) {
                format!("sup norm {size:e} above {:e}", config.blowup_norm)
            } else {
                format!("energy {energy:e} above {:e}", config.blowup_energy)
            };
            outcome = FlowOutcome::BlewUp(BlowUpReport {
                node: j,
                time: grid.time(j - 1),
                reason,
                growth,
            });
            break;
        }

        let xi_j: Vec<f64> = w.iter().zip(&u).map(|(a, b)| (a - b) / mu).collect();
        let v_j: Vec<f64> = u.iter().zip(&u0).map(|(a, b)| a - b).collect();

        // residual of the discrete equation with the functional's own selection
        spec.energy.subgradient(&u, &mut g);
        let mut r = vec![0.0; dim];
        for d in 0..dim {
            let deriv = (a0 * v_j[d]) / tau + history[d];
            let viscous = visc * (u[d] - prev[d]) / tau;
            r[d] = deriv + viscous + g[d] - step_eta[d] - f[d];
        }
        let residual = space.norm(&r);

        let reaction_envelope = match &source {
            Source::Reaction => reaction_eval(&u)?.1,
            _ => 0.0,
        };
        diagnostics.push(NodeDiagnostics {
            t: grid.time(j),
            norm: space.norm(&u),
            sup_norm: size,
            energy,
            reaction_envelope,
            residual,
            tolerance: tol,
            inner_iterations: iterations,
        });
        growth.push(size);
        states.push(u);
        shifted.push(v_j);
        xi.push(xi_j);
        eta.push(step_eta);
    }

    let forcing = if spec.forcing.is_empty() {
        vec![zero; states.len()]
    } else {
        spec.forcing[..states.len()].to_vec()
    };
    Ok(Trajectory {
        grid,
        space,
        states,
        xi,
        eta,
        forcing,
        diagnostics,
        energy_bound: spec.energy_bound(),
        viscosity: visc,
        outcome,
    })
}

/// Solves the regularized flow with `∂φ²` replaced by its Yosida
/// approximation. Blow-up is reported through [`Trajectory::outcome`].
pub fn solve_dc_flow(spec: &ProblemSpec, config: &SolverConfig) -> Result<Trajectory, FlowError> {
    march(spec, config, Source::Reaction)
}

/// [`solve_dc_flow`] with a strictly positive viscosity.
pub fn solve_viscous_flow(spec: &ProblemSpec, config: &SolverConfig) -> Result<Trajectory, FlowError> {
    if !(config.viscosity > 0.0) {
        return Err(FlowError::InvalidConfig(
            "viscous flow needs a positive viscosity".into(),
        ));
    }
    march(spec, config, Source::Reaction)
}

/// Largest node-wise distance between two trajectories on the same grid.
pub fn max_node_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| a.space.dist(x, y))
        .fold(0.0, f64::max)
}
