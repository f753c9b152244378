//! `certify`: chain-rule checks along a stored trajectory and the randomized
//! Gronwall suites. The bundle fails iff some certificate fails; rejected
//! instances are listed but do not fail it.

use crate::solve::{energy_range, slack_any};
use crate::{build_functional, to_json, write_file, CliError, Invocation, EXIT_ERROR, EXIT_OK};
use fraflow::certify::{
    check_chain_rule, check_viscous_pairing, handcrafted_violations, random_suite, ChainRuleReport, SlackModel,
    SuiteSummary, ViscousPairingReport,
};
use fraflow::io::TrajectoryDump;
use serde::Serialize;
use std::fs;

/// Seed used when neither the config nor `--seed` sets one.
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Serialize)]
pub struct DumpCertificates {
    pub path: String,
    pub nodes: usize,
    pub chain_rule: Vec<ChainRuleReport>,
    pub viscous_pairing: ViscousPairingReport,
}

#[derive(Debug, Serialize)]
pub struct SuiteCertificates {
    pub seed: u64,
    pub per_lemma: usize,
    pub random: SuiteSummary,
    pub handcrafted: Option<SuiteSummary>,
}

#[derive(Debug, Serialize)]
pub struct Bundle {
    pub passed: bool,
    pub failed: usize,
    pub rejected: usize,
    pub dump: Option<DumpCertificates>,
    pub suite: Option<SuiteCertificates>,
}

pub fn cmd_certify(inv: &Invocation) -> Result<i32, CliError> {
    let block = inv
        .config
        .certify
        .as_ref()
        .ok_or_else(|| CliError::invalid("missing certify block"))?;
    let mut failed = 0;
    let mut rejected = 0;

    let dump = match &block.dump {
        None => None,
        Some(path) => {
            let path = inv.resolve(path);
            let unreadable = |message: String| CliError::Dump {
                path: path.clone(),
                message,
            };
            let bytes = fs::read(&path).map_err(|e| unreadable(e.to_string()))?;
            let dump = TrajectoryDump::decode(&bytes).map_err(|e| unreadable(e.to_string()))?;
            let traj = dump.to_trajectory();
            let mut chain_rule = Vec::new();
            for spec in &block.functionals {
                let phi = build_functional(spec, dump.space())?;
                let selection: Vec<Vec<f64>> = traj
                    .states
                    .iter()
                    .map(|u| {
                        let mut g = vec![0.0; u.len()];
                        phi.subgradient(u, &mut g);
                        g
                    })
                    .collect();
                let slack = match block.slack_coeff {
                    Some(c) => SlackModel::new(c),
                    None => slack_any(&dump.pair, energy_range(phi.as_ref(), &traj.states)),
                };
                let report = check_chain_rule(&traj, phi.as_ref(), &selection, &dump.pair, slack);
                failed += usize::from(report.outcome.is_fail());
                chain_rule.push(report);
            }
            let viscous_pairing = check_viscous_pairing(&traj, &dump.pair, SlackModel::rounding());
            failed += usize::from(viscous_pairing.outcome.is_fail());
            Some(DumpCertificates {
                path: path.display().to_string(),
                nodes: traj.states.len(),
                chain_rule,
                viscous_pairing,
            })
        }
    };

    let suite = block.suite.as_ref().map(|s| {
        let seed = inv.seed.or(inv.config.seed).unwrap_or(DEFAULT_SEED);
        let random = SuiteSummary::run(&random_suite(seed, s.per_lemma));
        let handcrafted = s.handcrafted.then(|| SuiteSummary::run(&handcrafted_violations()));
        for summary in std::iter::once(&random).chain(handcrafted.as_ref()) {
            failed += summary.failed;
            rejected += summary.rejected;
        }
        SuiteCertificates {
            seed,
            per_lemma: s.per_lemma,
            random,
            handcrafted,
        }
    });

    let bundle = Bundle {
        passed: failed == 0,
        failed,
        rejected,
        dump,
        suite,
    };
    write_file(&inv.out.join("certificates.json"), to_json(&bundle))?;
    if let Some(s) = &bundle.suite {
        eprintln!(
            "random suite: {}/{} certified, {} failed, {} rejected",
            s.random.passed, s.random.total, s.random.failed, s.random.rejected
        );
        if let Some(h) = &s.handcrafted {
            eprintln!("handcrafted: {}/{} rejected", h.rejected, h.total);
        }
    }
    Ok(if bundle.passed { EXIT_OK } else { EXIT_ERROR })
}
