//! Exponent arithmetic for `∂_t^α(u - u₀) - Δ_p u - |u|^{q-2}u = f` on a
//! bounded domain of dimension `d`.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative tolerance for treating two exponents as equal.
pub const EXPONENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LocalExistence,
    SmallDataGlobal,
    SmallDataGlobalCritical,
    Global,
    OutsideTheory,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::LocalExistence => "local_existence",
            Verdict::SmallDataGlobal => "small_data_global",
            Verdict::SmallDataGlobalCritical => "small_data_global_critical",
            Verdict::Global => "global",
            Verdict::OutsideTheory => "outside_theory",
        }
    }

    pub fn parse(s: &str) -> Option<Verdict> {
        [
            Verdict::LocalExistence,
            Verdict::SmallDataGlobal,
            Verdict::SmallDataGlobalCritical,
            Verdict::Global,
            Verdict::OutsideTheory,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub p: f64,
    pub q: f64,
    pub d: u32,
    /// `dp/(d-p)₊`, infinite when `d ≤ p`.
    pub sobolev_p: f64,
    /// `2d/(d-2)₊`.
    pub sobolev_2: f64,
    /// `2*(p-1)`, the integrability of `∇u` from `Δ_p u ∈ L²`.
    pub gradient_integrability: f64,
    /// Interpolation weight from the Lebesgue-exponent balance, when the
    /// balance is nondegenerate.
    pub theta: Option<f64>,
    pub theta_in_unit_interval: bool,
    /// `θ(q-1)/(p-1) < 1`.
    pub theta_condition: Option<bool>,
    pub local_existence: bool,
    pub critical: bool,
    pub verdict: Verdict,
    /// The condition that decided the verdict.
    pub reason: String,
}

fn plus_ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

pub fn exponents_equal(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= EXPONENT_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Solves `1/(2(q-1)) = θ(1/r - 1/d) + (1-θ)/p*` for `θ`.
pub fn interpolation_theta(p: f64, q: f64, d: u32) -> Option<f64> {
    let df = d as f64;
    let inv_ps = recip(plus_ratio(df * p, df - p));
    let inv_2s = recip(plus_ratio(2.0 * df, df - 2.0));
    let inv_r = inv_2s / (p - 1.0);
    let den = inv_r - 1.0 / df - inv_ps;
    if den.abs() < 1e-300 {
        return None;
    }
    Some((1.0 / (2.0 * (q - 1.0)) - inv_ps) / den)
}

pub fn classify_regime(p: f64, q: f64, d: u32) -> RegimeReport {
    let df = d as f64;
    let sobolev_p = plus_ratio(df * p, df - p);
    let sobolev_2 = plus_ratio(2.0 * df, df - 2.0);
    let gradient_integrability = sobolev_2 * (p - 1.0);
    let theta = interpolation_theta(p, q, d);
    let theta_condition = theta.map(|t| {
        let ratio = t * (q - 1.0) / (p - 1.0);
        ratio < 1.0 && !exponents_equal(ratio, 1.0)
    });
    let lower = 2.0 * df / (df + 2.0);
    let p_ok = p > lower && !exponents_equal(p, lower);
    let critical = exponents_equal(q, sobolev_p);
    let q_sub = q < sobolev_p && !critical;
    let local_existence = p_ok && q_sub;

    let (verdict, reason) = if !p_ok {
        (Verdict::OutsideTheory, format!("p <= 2d/(d+2) = {lower}"))
    } else if critical && p < q {
        (Verdict::SmallDataGlobalCritical, "p < q = p*".to_string())
    } else if !q_sub {
        (Verdict::OutsideTheory, format!("q > p* = {sobolev_p}"))
    } else if p > q {
        (Verdict::Global, "p > q and q < p*".to_string())
    } else if p < q {
        (Verdict::SmallDataGlobal, "p < q < p*".to_string())
    } else {
        (Verdict::LocalExistence, "p = q < p*".to_string())
    };

    RegimeReport {
        p,
        q,
        d,
        sobolev_p,
        sobolev_2,
        gradient_integrability,
        theta,
        theta_in_unit_interval: theta.is_some_and(|t| t > 0.0 && t < 1.0),
        theta_condition,
        local_existence,
        critical,
        verdict,
        reason,
    }
}

/// Growth exponents of the structural bounds `m₂(r) = C r^a` and
/// `M₂(r) = C r^b` for the p-Laplace / q-power pair. Constants are unknown
/// and carried as 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionProfile {
    pub lower_exponent: f64,
    pub upper_exponent: Option<f64>,
    /// Whether `M₂(r)/m₂(r) → 0` as `r → 0⁺`, decided by comparing exponents.
    pub ratio_vanishes: Option<bool>,
    pub lower_constant: f64,
    pub upper_constant: f64,
}

impl AssumptionProfile {
    pub fn new(report: &RegimeReport) -> Self {
        let (p, q) = (report.p, report.q);
        let lower_exponent = (p - 1.0) / p;
        let upper_exponent = if 2.0 * (q - 1.0) <= report.sobolev_p {
            Some((q - 1.0) / p)
        } else {
            report.theta.and_then(|t| {
                let ratio = t * (q - 1.0) / (p - 1.0);
                (ratio < 1.0).then(|| (1.0 - t) * (q - 1.0) / (p * (1.0 - ratio)))
            })
        };
        let ratio_vanishes = upper_exponent.map(|b| b > lower_exponent);
        Self {
            lower_exponent,
            upper_exponent,
            ratio_vanishes,
            lower_constant: 1.0,
            upper_constant: 1.0,
        }
    }

    pub fn lower(&self, r: f64) -> f64 {
        self.lower_constant * r.powf(self.lower_exponent)
    }

    pub fn upper(&self, r: f64) -> Option<f64> {
        self.upper_exponent.map(|b| self.upper_constant * r.powf(b))
    }

    /// Fits `C` in `value ≈ C r^exponent` by least squares in log space.
    pub fn fit_constant(samples: &[(f64, f64)], exponent: f64) -> Option<f64> {
        let logs: Vec<f64> = samples
            .iter()
            .filter(|(r, v)| *r > 0.0 && *v > 0.0)
            .map(|(r, v)| v.ln() - exponent * r.ln())
            .collect();
        if logs.is_empty() {
            return None;
        }
        Some((logs.iter().sum::<f64>() / logs.len() as f64).exp())
    }
}
