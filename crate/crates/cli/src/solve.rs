//! `solve`: one trajectory, its diagnostics and its chain-rule certificate.

use crate::config::ProblemBlock;
use crate::{build_functional, build_pair, to_json, write_file, CliError, Invocation, EXIT_BLOWUP, EXIT_OK};
use fraflow::certify::{
    check_chain_rule, check_viscous_pairing, ChainRuleReport, SlackFamily, SlackModel, ViscousPairingReport,
};
use fraflow::convex::{Functional, Space};
use fraflow::flow::{solve_dc_flow, BlowUpReport, ProblemSpec, Trajectory};
use fraflow::io::{states_csv, trajectory_csv, TrajectoryDump};
use fraflow::plaplace::{summarize, ExperimentResult};
use fraflow::{SoninePair, TimeGrid};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub status: &'static str,
    /// Last accepted time before blow-up; the crossing lies within `t_star_uncertainty`.
    pub t_star: Option<f64>,
    pub t_star_uncertainty: Option<f64>,
    pub blow_up: Option<BlowUpReport>,
    pub steps: usize,
    pub tau: f64,
    pub accepted_nodes: usize,
    pub max_energy: f64,
    pub energy_bound: f64,
    pub final_state: Vec<f64>,
    pub experiment: Option<ExperimentResult>,
}

#[derive(Debug, Serialize)]
pub struct SolveCertificate {
    pub passed: bool,
    pub chain_rule: ChainRuleReport,
    pub viscous_pairing: ViscousPairingReport,
}

/// Slack for a `family` trajectory whose checked energy varies by `range`.
/// Pairs without a known order get the family's largest coefficient.
pub fn slack_for(family: SlackFamily, pair: &SoninePair, range: f64) -> SlackModel {
    match pair.order {
        Some(alpha) => SlackModel::calibrated(family, alpha, range),
        None => SlackModel::new(family.worst() * range.abs()),
    }
}

/// Slack when the problem class is unknown: the larger of all families.
pub fn slack_any(pair: &SoninePair, range: f64) -> SlackModel {
    SlackFamily::ALL
        .into_iter()
        .map(|f| slack_for(f, pair, range))
        .fold(SlackModel::rounding(), |a, b| if b.coeff > a.coeff { b } else { a })
}

/// `max φ(u_j) - min φ(u_j)` over the accepted nodes.
pub fn energy_range(phi: &dyn Functional, states: &[Vec<f64>]) -> f64 {
    let values: Vec<f64> = states.iter().map(|u| phi.value(u)).collect();
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

pub fn certify_trajectory(
    traj: &Trajectory,
    phi: &dyn Functional,
    pair: &SoninePair,
    family: SlackFamily,
) -> SolveCertificate {
    let slack = slack_for(family, pair, energy_range(phi, &traj.states));
    let chain_rule = check_chain_rule(traj, phi, &traj.xi, pair, slack);
    let viscous_pairing = check_viscous_pairing(traj, pair, SlackModel::rounding());
    SolveCertificate {
        passed: chain_rule.passed() && viscous_pairing.outcome.is_pass(),
        chain_rule,
        viscous_pairing,
    }
}

fn build_problem(inv: &Invocation) -> Result<(ProblemSpec, Option<fraflow::plaplace::PdeConfig>), CliError> {
    let problem = inv
        .config
        .problem
        .as_ref()
        .ok_or_else(|| CliError::invalid("missing problem block"))?;
    match problem {
        ProblemBlock::Abstract {
            energy,
            reaction,
            initial,
            forcing,
            horizon,
            steps,
        } => {
            let space = Space::euclidean(initial.len());
            let kernel = inv
                .config
                .kernel
                .as_ref()
                .ok_or_else(|| CliError::invalid("missing kernel block"))?;
            let pair = build_pair(kernel, inv)?;
            let grid = TimeGrid::new(*horizon, *steps).map_err(|e| CliError::invalid(e.to_string()))?;
            let mut spec = ProblemSpec::new(
                build_functional(energy, space)?,
                build_functional(reaction, space)?,
                pair,
                initial.clone(),
                grid,
            );
            if let Some(f) = forcing {
                spec = spec.with_forcing(vec![f.clone(); grid.nodes()]);
            }
            spec.validate().map_err(|e| CliError::invalid(e.to_string()))?;
            Ok((spec, None))
        }
        ProblemBlock::PLaplace(pde) => {
            let spec = pde.problem().map_err(|e| CliError::invalid(e.to_string()))?;
            Ok((spec, Some(*pde)))
        }
    }
}

pub fn cmd_solve(inv: &Invocation) -> Result<i32, CliError> {
    let (spec, pde) = build_problem(inv)?;
    let traj = solve_dc_flow(&spec, &inv.config.solver).map_err(CliError::run)?;
    let tau = traj.grid.tau();
    let blow_up = traj.blow_up().cloned();
    let diagnostics = Diagnostics {
        status: if traj.completed() { "completed" } else { "blew_up" },
        t_star: blow_up.as_ref().map(|b| b.time),
        t_star_uncertainty: blow_up.as_ref().map(|_| tau),
        blow_up,
        steps: traj.grid.steps(),
        tau,
        accepted_nodes: traj.states.len(),
        max_energy: traj.max_energy(),
        energy_bound: traj.energy_bound,
        final_state: traj.final_state().to_vec(),
        experiment: pde.map(|p| summarize(&p, &traj)),
    };
    let family = if pde.is_some() {
        SlackFamily::PLaplace
    } else {
        SlackFamily::ScalarRelaxation
    };
    let certificate = certify_trajectory(&traj, spec.energy.as_ref(), &spec.pair, family);

    let out = &inv.out;
    write_file(&out.join("trajectory.csv"), trajectory_csv(&traj))?;
    write_file(&out.join("states.csv"), states_csv(&traj))?;
    write_file(&out.join("diagnostics.json"), to_json(&diagnostics))?;
    write_file(&out.join("certificate.json"), to_json(&certificate))?;
    write_file(
        &out.join("trajectory.dump"),
        TrajectoryDump::from_trajectory(&traj, &spec.pair).encode(),
    )?;

    if !certificate.passed {
        eprintln!(
            "warning: chain-rule certificate failed: {:?}",
            certificate.chain_rule.outcome
        );
    }
    match diagnostics.t_star {
        Some(t) => {
            eprintln!("blew up after t = {t} (within {tau})");
            Ok(EXIT_BLOWUP)
        }
        None => Ok(EXIT_OK),
    }
}
