//! Continuity moduli of computed trajectories against the bound for
//! `u = u₀ + ℓ * G` with nonincreasing `ℓ`:
//!
//! ```text
//! ‖u(t) - u(s)‖ ≤ (‖ℓ‖_{L¹(0,h)}^{1/2} + ‖ℓ(h + ·) - ℓ‖_{L¹(0,T-h)}^{1/2}) · S^{1/2}
//! ```
//!
//! with `h = |t - s|` and `S = sup (ℓ * ‖G‖²)`.

use super::Trajectory;
use crate::kernel::{convolve, SoninePair};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub lag_steps: usize,
    pub lag: f64,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusTable {
    pub rows: Vec<ModulusRow>,
    /// `max_j (ℓ * ‖G‖²)(t_j)`.
    pub forcing_sup: f64,
    /// `‖u₁ - u₀‖` against the lag-τ bound.
    pub initial_jump: f64,
    pub slack: f64,
    pub passed: bool,
}

impl ModulusTable {
    /// Least-squares slope of `log observed` against `log lag`.
    pub fn observed_exponent(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.observed > 0.0)
            .map(|r| (r.lag.ln(), r.observed.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }
}

/// Tabulates `max_j ‖u_{j+h} - u_j‖` for lags `τ, 2τ, 4τ, …` and compares
/// with the bound, allowing `slack` for the discretization.
pub fn continuity_modulus(traj: &Trajectory, pair: &SoninePair, slack: f64) -> ModulusTable {
    let grid = traj.grid;
    let last = traj.last_node();
    let horizon = grid.time(last);
    let space = traj.space;

    let balance = traj.balance();
    let mut sq = vec![0.0; grid.nodes()];
    for (j, g) in balance.iter().enumerate() {
        sq[j] = space.norm_sq(g);
    }
    let conv = convolve(&pair.l, &sq, &grid).expect("path sized to the grid");
    let forcing_sup = conv[..=last].iter().cloned().fold(0.0, f64::max);
    let root = forcing_sup.sqrt();
    let big_l = |t: f64| pair.l.antiderivative(t);

    let mut rows = Vec::new();
    let mut lag_steps = 1;
    while lag_steps <= last {
        let lag = lag_steps as f64 * grid.tau();
        let observed = (0..=last - lag_steps)
            .map(|j| space.dist(&traj.states[j + lag_steps], &traj.states[j]))
            .fold(0.0, f64::max);
        let shift = (big_l(horizon - lag) + big_l(lag) - big_l(horizon)).max(0.0);
        let bound = (big_l(lag).sqrt() + shift.sqrt()) * root;
        rows.push(ModulusRow {
            lag_steps,
            lag,
            observed,
            bound,
        });
        lag_steps *= 2;
    }
    let initial_jump = if last >= 1 {
        space.dist(&traj.states[1], &traj.states[0])
    } else {
        0.0
    };
    let initial_bound = big_l(grid.tau()).sqrt() * root;
    let passed = rows.iter().all(|r| r.observed <= r.bound + slack) && initial_jump <= initial_bound + slack;
    ModulusTable {
        rows,
        forcing_sup,
        initial_jump,
        slack,
        passed,
    }
}
