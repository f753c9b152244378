//! Numerical certificates for the integral inequalities used by the
//! existence theory, and the oracles the tests compare against.
//!
//! Every certificate ends in exactly one of three states: the claimed bound
//! holds on the samples, it fails at a reported witness, or the input does
//! not satisfy the hypothesis and is rejected.

mod chain_rule;
mod gronwall;
mod mittag_leffler;

pub use chain_rule::{check_chain_rule, check_viscous_pairing, ChainRuleReport, FormReport, ViscousPairingReport};
pub use gronwall::{
    gronwall_linear, gronwall_local, gronwall_small, handcrafted_violations, random_suite, weighted_mass, Certificate,
    LinearInstance, LocalInstance, ScalarMap, SmallDataInstance, SuiteInstance, SuiteSummary, BISECTION_BRACKET,
};
pub use mittag_leffler::{mittag_leffler, relaxation, MittagLefflerError};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail {
        node: Option<usize>,
        time: Option<f64>,
        value: f64,
        detail: String,
    },
    Reject {
        reason: String,
    },
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail { .. })
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, Outcome::Reject { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail { .. } => "fail",
            Outcome::Reject { .. } => "reject",
        }
    }
}

/// Budget for discretization error: `floor + coeff·τ^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackModel {
    pub floor: f64,
    pub coeff: f64,
}

impl SlackModel {
    pub const FLOOR: f64 = 1e-8;

    pub fn new(coeff: f64) -> Self {
        Self {
            floor: Self::FLOOR,
            coeff,
        }
    }

    /// Rounding only.
    pub fn rounding() -> Self {
        Self::new(0.0)
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.floor + self.coeff * tau.sqrt()
    }

    /// Smallest coefficient covering observed shortfalls `(τ, -min margin)`,
    /// scaled by `safety`.
    pub fn fit(samples: &[(f64, f64)], safety: f64) -> Self {
        let coeff = samples
            .iter()
            .map(|(tau, short)| (short - Self::FLOOR).max(0.0) / tau.sqrt())
            .fold(0.0, f64::max);
        Self::new(safety * coeff)
    }

    /// Budget for the inverted chain-rule form of an order-`alpha` flow from
    /// `family` whose energy varies by `energy_range` over the run.
    ///
    /// Coefficients are the calibrated values scaled by the range. Between
    /// tabulated orders the larger neighbour is used.
    pub fn calibrated(family: SlackFamily, alpha: f64, energy_range: f64) -> Self {
        let table = family.coeffs();
        let pos = table.partition_point(|(a, _)| *a < alpha);
        let coeff = match table.get(pos) {
            Some((a, c)) if *a == alpha => *c,
            Some((_, c)) => c.max(table[pos.saturating_sub(1)].1),
            None => table[table.len() - 1].1,
        };
        Self::new(coeff * energy_range.abs())
    }
}

/// Problem class a slack coefficient was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlackFamily {
    /// Scalar and low-dimensional relaxations.
    ScalarRelaxation,
    /// Discretized p-Laplace flows.
    PLaplace,
}

impl SlackFamily {
    pub const ALL: [SlackFamily; 2] = [SlackFamily::ScalarRelaxation, SlackFamily::PLaplace];

    pub fn coeffs(self) -> &'static [(f64, f64)] {
        match self {
            SlackFamily::ScalarRelaxation => &RELAXATION_COEFFS,
            SlackFamily::PLaplace => &PLAPLACE_COEFFS,
        }
    }

    /// Largest tabulated coefficient, for pairs without a known order.
    pub fn worst(self) -> f64 {
        self.coeffs().iter().map(|(_, c)| *c).fold(0.0, f64::max)
    }
}

/// Slack coefficients per unit of energy range, by order.
///
/// Fitted on `∂^α(u - 1) + u = 0`, `u(0) = 1`, `φ = ½u²`, `T = 1` with
/// `N ∈ {128, 256, 512, 1024, 2048, 4096}`: the largest
/// `-min margin / (½ √τ)` of the inverted form over the ladder, times 1.25.
/// The shortfall decays like `τ^α`, so below `α = ½` the fitted value only
/// covers steps down to `1/4096`.
pub const RELAXATION_COEFFS: [(f64, f64); 11] = [
    (0.1, 0.0),
    (0.2, 1.655),
    (0.3, 1.960),
    (0.4, 1.183),
    (0.5, 0.575),
    (0.6, 0.295),
    (0.7, 0.170),
    (0.8, 0.0830),
    (0.9, 0.0327),
    (0.99, 0.00142),
    (1.0, 0.0),
];

/// Slack coefficients per unit of energy range for p-Laplace flows.
///
/// Fitted on sine-bump data, `p ∈ {1.5, 2, 3, 4}`, `(q, A) ∈ {(4, ½), (4, 1),
/// (2, 2), (1.5, 1)}`, `d = 1` (`m = 32`) and `d = 2` (`m = 8`),
/// `N ∈ {128, …, 2048}`: the largest `-min margin / (range √τ)` times 1.25.
/// The worst node is always the first step. Stiff modes make the shortfall
/// decay slower than `√τ`, so steps finer than `1/2048` can exceed it.
pub const PLAPLACE_COEFFS: [(f64, f64); 11] = [
    (0.1, 0.0),
    (0.2, 0.0),
    (0.3, 1.824),
    (0.4, 3.203),
    (0.5, 3.469),
    (0.6, 2.501),
    (0.7, 1.488),
    (0.8, 0.757),
    (0.9, 0.230),
    (0.99, 0.00548),
    (1.0, 0.0),
];

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}
