//! Discrete integral chain rules along computed trajectories.
//!
//! For `ξ(t) ∈ ∂φ(u(t))` and `ψ = φ(u) - φ(u₀)`:
//!
//! ```text
//! (i)   ∫₀ᵗ ⟨ℬ(u - u₀), ξ⟩ ≥ [k * ψ](t)
//! (ii)  [ℓ * ⟨ℬ(u - u₀), ξ⟩](t) ≥ ψ(t)
//! ```
//!
//! Form (i) holds exactly for the discrete scheme whenever the convolution
//! weights are nonincreasing, so its margins only see rounding and the
//! inner tolerance. Form (ii) inverts `ℬ` with `ℓ` and carries a
//! discretization error that the slack model budgets.
//!
//! The statements hold for almost every `t`; on a grid every node is
//! checked, which is stronger than the continuous hypothesis requires.

use super::{Outcome, SlackModel};
use crate::convex::Functional;
use crate::flow::Trajectory;
use crate::kernel::{convolve, SoninePair};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub margin: Vec<f64>,
    pub min_margin: f64,
    pub worst_node: usize,
}

impl FormReport {
    fn new(lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        let margin: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
        let (worst_node, min_margin) = margin
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, m)| if m < acc.1 { (j, m) } else { acc });
        Self {
            lhs,
            rhs,
            margin,
            min_margin,
            worst_node,
        }
    }

    fn outcome(&self, times: &[f64], allowed: f64) -> Outcome {
        if self.min_margin >= -allowed {
            Outcome::Pass
        } else {
            Outcome::Fail {
                node: Some(self.worst_node),
                time: Some(times[self.worst_node]),
                value: self.min_margin,
                detail: format!("margin {:e} below -{:e}", self.min_margin, allowed),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRuleReport {
    pub functional: String,
    pub times: Vec<f64>,
    pub cumulative: FormReport,
    pub inverted: FormReport,
    pub slack: SlackModel,
    /// `slack.value(τ)` at this trajectory's step.
    pub allowed: f64,
    pub outcome: Outcome,
    pub note: String,
}

impl ChainRuleReport {
    pub fn passed(&self) -> bool {
        self.outcome.is_pass()
    }

    pub fn min_margin(&self) -> f64 {
        self.cumulative.min_margin.min(self.inverted.min_margin)
    }
}

const AE_NOTE: &str = "checked at every node; the continuous statement only asserts almost every t";

/// Pads a path over the accepted nodes with zeros up to the full grid.
fn padded(values: &[f64], nodes: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    out.resize(nodes, 0.0);
    out
}

/// Checks both forms with `selection[j] ∈ ∂φ(u_j)`, usually `traj.xi`.
pub fn check_chain_rule(
    traj: &Trajectory,
    phi: &dyn Functional,
    selection: &[Vec<f64>],
    pair: &SoninePair,
    slack: SlackModel,
) -> ChainRuleReport {
    let grid = traj.grid;
    let last = traj.last_node();
    let nodes = grid.nodes();
    let tau = grid.tau();
    let space = traj.space;
    let times: Vec<f64> = (0..=last).map(|j| grid.time(j)).collect();

    let deriv = traj.nonlocal_derivative(pair);
    let base = phi.value(&traj.states[0]);
    let psi: Vec<f64> = traj.states.iter().map(|u| phi.value(u) - base).collect();
    let pairing: Vec<f64> = (0..=last)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                space.inner(&deriv[j], &selection[j])
            }
        })
        .collect();

    let mut running = 0.0;
    let lhs_i: Vec<f64> = pairing
        .iter()
        .map(|p| {
            running += tau * p;
            running
        })
        .collect();
    let rhs_i = convolve(&pair.k, &padded(&psi, nodes), &grid).expect("grid-sized path");
    let lhs_ii = convolve(&pair.l, &padded(&pairing, nodes), &grid).expect("grid-sized path");

    let cumulative = FormReport::new(lhs_i, rhs_i[..=last].to_vec());
    let inverted = FormReport::new(lhs_ii[..=last].to_vec(), psi);
    let allowed = slack.value(tau);
    let outcome = match cumulative.outcome(&times, allowed) {
        Outcome::Pass => inverted.outcome(&times, allowed),
        fail => fail,
    };
    ChainRuleReport {
        functional: phi.name(),
        times,
        cumulative,
        inverted,
        slack,
        allowed,
        outcome,
        note: AE_NOTE.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscousPairingReport {
    pub times: Vec<f64>,
    pub report: FormReport,
    pub slack: SlackModel,
    pub allowed: f64,
    pub outcome: Outcome,
}

/// `Σ_{j≤J} ⟨u_j - u_{j-1}, ℬ_j⟩ ≥ ½ (ℓ * ‖ℬ‖²)(t_J)` for every `J`.
pub fn check_viscous_pairing(traj: &Trajectory, pair: &SoninePair, slack: SlackModel) -> ViscousPairingReport {
    let grid = traj.grid;
    let last = traj.last_node();
    let space = traj.space;
    let times: Vec<f64> = (0..=last).map(|j| grid.time(j)).collect();
    let deriv = traj.nonlocal_derivative(pair);

    let mut running = 0.0;
    let mut lhs = vec![0.0; last + 1];
    for j in 1..=last {
        let step: Vec<f64> = traj.states[j]
            .iter()
            .zip(&traj.states[j - 1])
            .map(|(a, b)| a - b)
            .collect();
        running += space.inner(&step, &deriv[j]);
        lhs[j] = running;
    }
    let sq: Vec<f64> = deriv.iter().map(|b| space.norm_sq(b)).collect();
    let conv = convolve(&pair.l, &padded(&sq, grid.nodes()), &grid).expect("grid-sized path");
    let rhs: Vec<f64> = conv[..=last].iter().map(|v| 0.5 * v).collect();
    let report = FormReport::new(lhs, rhs);
    let allowed = slack.value(grid.tau());
    let outcome = report.outcome(&times, allowed);
    ViscousPairingReport {
        times,
        report,
        slack,
        allowed,
        outcome,
    }
}
