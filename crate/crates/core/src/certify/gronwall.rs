//! Certificates for three Volterra-inequality lemmas on sampled paths:
//!
//! * linear: `φ ≤ h + g * φ` gives `‖φ‖_{L^r} ≤ 2e^{MS} ‖h‖_{L^r}` once
//!   `∫₀^S g e^{-Ms} ds ≤ ½`;
//! * local: `φ ≤ a + g * M(φ)` gives `φ ≤ a + 1` on `[0, min(R, S)]` once
//!   `∫₀^R g < 1/(4 M(a+1))`;
//! * small data: `φ ≤ b + g * N(φ)` with `N ≤ 0` on `[0, δ]`, `δ > b`,
//!   gives `φ ≤ b`.
//!
//! Convolutions use the same product integration as the solver. Sup norms
//! are node-wise maxima; the grid step is reported as the sampling gap.

use super::{integrate, Outcome};
use crate::kernel::{convolve, ConvWeights, Kernel, KernelError, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Search interval for the exponential weight `M`.
pub const BISECTION_BRACKET: (f64, f64) = (0.0, 1e4);
const BISECTION_STEPS: usize = 200;
/// Relative slack when checking a hypothesis on samples.
const HYPOTHESIS_TOL: f64 = 1e-10;
/// Points at which sign and monotonicity conditions on scalar maps are probed.
const PROBE_POINTS: usize = 2001;

/// A scalar function `[0, ∞) → ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarMap {
    /// `Σ coeffs[i] r^i`.
    Polynomial { coeffs: Vec<f64> },
    /// `coeff · r^exponent`.
    Power { coeff: f64, exponent: f64 },
    /// Piecewise-linear through `(r, value)` points with increasing `r`,
    /// extended by the end slopes.
    Table { points: Vec<[f64; 2]> },
}

impl ScalarMap {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            ScalarMap::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c),
            ScalarMap::Power { coeff, exponent } => coeff * r.max(0.0).powf(*exponent),
            ScalarMap::Table { points } => table_eval(points, r),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            ScalarMap::Polynomial { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                Err("polynomial coefficients must be finite".into())
            }
            ScalarMap::Power { coeff, exponent }
                if !(coeff.is_finite() && exponent.is_finite() && *exponent >= 0.0) =>
            {
                Err("power map needs finite coeff and exponent >= 0".into())
            }
            ScalarMap::Table { points } => {
                if points.len() < 2 {
                    return Err("table needs at least two points".into());
                }
                if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                    return Err("table entries must be finite".into());
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err("table abscissae must increase".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn table_eval(points: &[[f64; 2]], r: f64) -> f64 {
    let n = points.len();
    let k = points.partition_point(|p| p[0] <= r).clamp(1, n - 1);
    let ([x0, y0], [x1, y1]) = (points[k - 1], points[k]);
    y0 + (y1 - y0) * (r - x0) / (x1 - x0)
}

fn probe(r_max: f64) -> impl Iterator<Item = f64> {
    (0..PROBE_POINTS).map(move |i| r_max * i as f64 / (PROBE_POINTS - 1) as f64)
}

/// `∫₀^S g(s) e^{-Ms} ds`, integrated by parts against the antiderivative so
/// singular kernels pose no difficulty.
pub fn weighted_mass(g: &Kernel, m: f64, horizon: f64) -> f64 {
    let big_g = |s: f64| g.antiderivative(s);
    if m == 0.0 {
        return big_g(horizon);
    }
    let boundary = big_g(horizon) * (-m * horizon).exp();
    let tail = integrate(&|s: f64| big_g(s) * (-m * s).exp(), 0.0, horizon, 1e-14);
    boundary + m * tail
}

/// One certificate in JSON-ready form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lemma: String,
    pub outcome: Outcome,
    /// Computed constants and the compared quantities.
    pub values: BTreeMap<String, f64>,
    pub hypothesis_tolerance: f64,
    /// Grid step; sup norms cannot resolve finer than this.
    pub sampling_gap: f64,
}

impl Certificate {
    fn new(lemma: &str, grid: &TimeGrid) -> Self {
        Self {
            lemma: lemma.to_string(),
            outcome: Outcome::Pass,
            values: BTreeMap::new(),
            hypothesis_tolerance: HYPOTHESIS_TOL,
            sampling_gap: grid.tau(),
        }
    }

    fn reject(mut self, reason: impl Into<String>) -> Self {
        self.outcome = Outcome::Reject { reason: reason.into() };
        self
    }

    fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }
}

fn check_samples(name: &str, values: &[f64], grid: &TimeGrid) -> Result<(), String> {
    if values.len() != grid.nodes() {
        return Err(format!(
            "{name} has {} samples, grid has {} nodes",
            values.len(),
            grid.nodes()
        ));
    }
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(format!("{name} is not finite at node {j}"));
    }
    if let Some(j) = values.iter().position(|v| *v < 0.0) {
        return Err(format!("{name} is negative at node {j}"));
    }
    Ok(())
}

fn check_kernel(g: &Kernel, grid: &TimeGrid) -> Result<(), String> {
    g.validate().map_err(|e| e.to_string())?;
    if !grid.horizon().is_finite() || grid.horizon() <= 0.0 {
        return Err("grid horizon must be positive".into());
    }
    Ok(())
}

/// First node where `phi` exceeds `bound` beyond the hypothesis tolerance.
fn hypothesis_violation(phi: &[f64], bound: &[f64]) -> Option<(usize, f64)> {
    phi.iter()
        .zip(bound)
        .enumerate()
        .map(|(j, (p, b))| (j, p - b, HYPOTHESIS_TOL * (1.0 + b.abs())))
        .find(|(_, excess, tol)| excess > tol)
        .map(|(j, excess, _)| (j, excess))
}

fn violation_reason(j: usize, excess: f64, grid: &TimeGrid) -> String {
    format!("hypothesis fails at node {j} (t = {}) by {excess:e}", grid.time(j))
}

/// `L^r(0, S)` norm of the piecewise-constant path with right-endpoint
/// values; `None` is the sup norm over all nodes.
fn lebesgue_norm(values: &[f64], tau: f64, exponent: Option<f64>) -> f64 {
    match exponent {
        None => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        Some(r) => {
            let s: f64 = values[1..].iter().map(|v| tau * v.abs().powf(r)).sum();
            s.powf(1.0 / r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearInstance {
    pub grid: TimeGrid,
    pub phi: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Kernel,
    /// Lebesgue exponent `r ≥ 1`; `None` is `r = ∞`.
    pub exponent: Option<f64>,
}

impl LinearInstance {
    /// Builds `φ = h + g * φ` by forward substitution, so the hypothesis
    /// holds with equality.
    pub fn from_equality(grid: TimeGrid, h: Vec<f64>, g: Kernel, exponent: Option<f64>) -> Result<Self, KernelError> {
        grid.check_path(h.len())?;
        let w = ConvWeights::new(&g, &grid);
        let a0 = w.leading();
        if a0 >= 1.0 {
            return Err(KernelError::InvalidParameters(format!(
                "leading weight {a0} leaves no nonnegative solution"
            )));
        }
        let mut phi = vec![0.0; h.len()];
        phi[0] = h[0];
        for j in 1..h.len() {
            let hist: f64 = (1..j).map(|i| w.weight(j, i) * phi[i]).sum();
            phi[j] = (h[j] + hist) / (1.0 - a0);
        }
        Ok(Self {
            grid,
            phi,
            h,
            g,
            exponent,
        })
    }
}

/// Smallest `M` in the bracket with `∫₀^S g e^{-Ms} ≤ ½`.
fn weight_exponent(g: &Kernel, horizon: f64) -> Option<f64> {
    if weighted_mass(g, 0.0, horizon) <= 0.5 {
        return Some(0.0);
    }
    let (mut lo, mut hi) = BISECTION_BRACKET;
    if weighted_mass(g, hi, horizon) > 0.5 {
        return None;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if weighted_mass(g, mid, horizon) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

pub fn gronwall_linear(inst: &LinearInstance) -> Certificate {
    let grid = &inst.grid;
    let cert = Certificate::new("linear", grid);
    if let Err(e) = check_kernel(&inst.g, grid)
        .and_then(|_| check_samples("phi", &inst.phi, grid))
        .and_then(|_| check_samples("h", &inst.h, grid))
    {
        return cert.reject(e);
    }
    if let Some(r) = inst.exponent {
        if !(r >= 1.0 && r.is_finite()) {
            return cert.reject(format!("exponent {r} outside [1, ∞]"));
        }
    }
    let conv = convolve(&inst.g, &inst.phi, grid).expect("validated lengths");
    let bound: Vec<f64> = inst.h.iter().zip(&conv).map(|(h, c)| h + c).collect();
    if let Some((j, excess)) = hypothesis_violation(&inst.phi, &bound) {
        return cert.reject(violation_reason(j, excess, grid));
    }
    let horizon = grid.horizon();
    let Some(m) = weight_exponent(&inst.g, horizon) else {
        return cert.reject(format!(
            "no M in [{}, {}] brings the weighted kernel mass to 1/2",
            BISECTION_BRACKET.0, BISECTION_BRACKET.1
        ));
    };
    let c0 = 2.0 * (m * horizon).exp();
    let tau = grid.tau();
    let lhs = lebesgue_norm(&inst.phi, tau, inst.exponent);
    let rhs = c0 * lebesgue_norm(&inst.h, tau, inst.exponent);
    let mut cert = cert;
    cert.set("M", m);
    cert.set("C0", c0);
    cert.set("weighted_mass", weighted_mass(&inst.g, m, horizon));
    cert.set("phi_norm", lhs);
    cert.set("bound", rhs);
    if lhs > rhs * (1.0 + 1e-12) {
        cert.outcome = Outcome::Fail {
            node: None,
            time: None,
            value: lhs / rhs,
            detail: format!("‖φ‖ = {lhs:e} exceeds C0‖h‖ = {rhs:e}"),
        };
    }
    cert
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalInstance {
    pub grid: TimeGrid,
    pub phi: Vec<f64>,
    pub a: f64,
    /// Nondecreasing, nonnegative `M`.
    pub growth: ScalarMap,
    pub g: Kernel,
}

fn apply_map(map: &ScalarMap, phi: &[f64]) -> Vec<f64> {
    phi.iter().map(|v| map.eval(*v)).collect()
}

impl LocalInstance {
    /// `iterations` Picard steps `φ ← a + g * M(φ)` from `φ ≡ a`. The iterates
    /// increase, so each satisfies the hypothesis. Stops early if the next
    /// iterate would leave `[0, 1e50]`.
    pub fn picard(grid: TimeGrid, a: f64, growth: ScalarMap, g: Kernel, iterations: usize) -> Self {
        let mut phi = vec![a; grid.nodes()];
        for _ in 0..iterations {
            let conv = convolve(&g, &apply_map(&growth, &phi), &grid).expect("grid-sized path");
            let next: Vec<f64> = conv.iter().map(|c| a + c).collect();
            if next.iter().any(|v| !(v.is_finite() && *v <= 1e50)) {
                break;
            }
            phi = next;
        }
        Self {
            grid,
            phi,
            a,
            growth,
            g,
        }
    }

    /// A discontinuous staircase `φ = a + G(t_k) M(a)` on blocks of
    /// `block` steps starting at `t_k`. Since `φ ≥ a` and `G` grows, it sits
    /// below `a + g * M(φ)`.
    pub fn staircase(grid: TimeGrid, a: f64, growth: ScalarMap, g: Kernel, block: usize) -> Self {
        let block = block.max(1);
        let m_a = growth.eval(a);
        let phi = (0..grid.nodes())
            .map(|j| a + g.antiderivative(grid.time(j - j % block)) * m_a)
            .collect();
        Self {
            grid,
            phi,
            a,
            growth,
            g,
        }
    }
}

pub fn gronwall_local(inst: &LocalInstance) -> Certificate {
    let grid = &inst.grid;
    let cert = Certificate::new("local", grid);
    if !(inst.a.is_finite() && inst.a >= 0.0) {
        return cert.reject(format!("a = {} must be nonnegative", inst.a));
    }
    if let Err(e) = check_kernel(&inst.g, grid)
        .and_then(|_| check_samples("phi", &inst.phi, grid))
        .and_then(|_| inst.growth.validate())
    {
        return cert.reject(e);
    }
    let r_max = 2.0 * inst.phi.iter().cloned().fold(inst.a + 1.0, f64::max);
    let mut prev = inst.growth.eval(0.0);
    for r in probe(r_max) {
        let v = inst.growth.eval(r);
        if v < 0.0 {
            return cert.reject(format!("M({r}) = {v} is negative"));
        }
        if v < prev - 1e-12 * prev.abs().max(1.0) {
            return cert.reject(format!("M decreases near r = {r}"));
        }
        prev = v;
    }
    let conv = convolve(&inst.g, &apply_map(&inst.growth, &inst.phi), grid).expect("validated lengths");
    let bound: Vec<f64> = conv.iter().map(|c| inst.a + c).collect();
    if let Some((j, excess)) = hypothesis_violation(&inst.phi, &bound) {
        return cert.reject(violation_reason(j, excess, grid));
    }

    let horizon = grid.horizon();
    let m_at = inst.growth.eval(inst.a + 1.0);
    let mass = |t: f64| inst.g.antiderivative(t);
    let (radius, capped) = if m_at == 0.0 || mass(horizon) < 1.0 / (4.0 * m_at) {
        (horizon, true)
    } else {
        let target = 1.0 / (4.0 * m_at);
        let (mut lo, mut hi) = (0.0, horizon);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mass(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, false)
    };
    let mut cert = cert;
    if !(radius > 0.0) {
        return cert.reject("kernel mass admits no positive horizon");
    }
    let window = radius.min(horizon);
    let (worst, sup) = inst
        .phi
        .iter()
        .enumerate()
        .take_while(|(j, _)| grid.time(*j) <= window)
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (j, v)| if *v > acc.1 { (j, *v) } else { acc },
        );
    let limit = inst.a + 1.0;
    cert.set("R", radius);
    cert.set("R_capped_at_S", if capped { 1.0 } else { 0.0 });
    cert.set("M(a+1)", m_at);
    cert.set("kernel_mass_at_R", mass(radius));
    cert.set("sup_phi", sup);
    cert.set("bound", limit);
    if sup > limit + HYPOTHESIS_TOL * (1.0 + limit) {
        cert.outcome = Outcome::Fail {
            node: Some(worst),
            time: Some(grid.time(worst)),
            value: sup,
            detail: format!("φ = {sup} exceeds a + 1 = {limit} inside [0, {window}]"),
        };
    }
    cert
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallDataInstance {
    pub grid: TimeGrid,
    pub phi: Vec<f64>,
    pub b: f64,
    pub delta: f64,
    /// `N`, required to be nonpositive on `[0, δ]`.
    pub nonlinearity: ScalarMap,
    pub g: Kernel,
}

impl SmallDataInstance {
    /// Solves `φ = b + g * N(φ)` node by node, so the hypothesis holds with
    /// equality up to rounding.
    pub fn from_equality(grid: TimeGrid, b: f64, delta: f64, nonlinearity: ScalarMap, g: Kernel) -> Self {
        let w = ConvWeights::new(&g, &grid);
        let a0 = w.leading();
        let mut phi = vec![b; grid.nodes()];
        let mut n_vals = vec![nonlinearity.eval(b); grid.nodes()];
        for j in 1..grid.nodes() {
            let c = b + (1..j).map(|i| w.weight(j, i) * n_vals[i]).sum::<f64>();
            // x = c + a₀ N(x) by a secant iteration from the previous value
            let f = |x: f64| x - a0 * nonlinearity.eval(x) - c;
            let x0_start = c;
            let mut x1 = c + a0 * nonlinearity.eval(c);
            if x1 == x0_start {
                x1 += 1e-8 * (1.0 + c.abs());
            }
            let mut x0 = x0_start;
            let (mut f0, mut f1) = (f(x0), f(x1));
            for _ in 0..100 {
                if f1 == 0.0 || f1 == f0 {
                    break;
                }
                let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                (x0, f0) = (x1, f1);
                x1 = x2;
                f1 = f(x1);
                if (x1 - x0).abs() <= 1e-16 * (1.0 + x1.abs()) {
                    break;
                }
            }
            phi[j] = x1;
            n_vals[j] = nonlinearity.eval(x1);
        }
        Self {
            grid,
            phi,
            b,
            delta,
            nonlinearity,
            g,
        }
    }
}

pub fn gronwall_small(inst: &SmallDataInstance) -> Certificate {
    let grid = &inst.grid;
    let cert = Certificate::new("small_data", grid);
    if !(inst.b.is_finite() && inst.b >= 0.0) {
        return cert.reject(format!("b = {} must be nonnegative", inst.b));
    }
    if !(inst.delta.is_finite() && inst.delta > inst.b) {
        return cert.reject(format!("requires δ > b, got δ = {} and b = {}", inst.delta, inst.b));
    }
    if let Err(e) = check_kernel(&inst.g, grid)
        .and_then(|_| check_samples("phi", &inst.phi, grid))
        .and_then(|_| inst.nonlinearity.validate())
    {
        return cert.reject(e);
    }
    if let Some(r) = probe(inst.delta).find(|r| inst.nonlinearity.eval(*r) > 0.0) {
        return cert.reject(format!(
            "N({r}) = {} is positive inside [0, δ]",
            inst.nonlinearity.eval(r)
        ));
    }
    let conv = convolve(&inst.g, &apply_map(&inst.nonlinearity, &inst.phi), grid).expect("validated lengths");
    let bound: Vec<f64> = conv.iter().map(|c| inst.b + c).collect();
    if let Some((j, excess)) = hypothesis_violation(&inst.phi, &bound) {
        return cert.reject(violation_reason(j, excess, grid));
    }
    let (worst, sup) =
        inst.phi.iter().cloned().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (j, v)| if v > acc.1 { (j, v) } else { acc },
        );
    let eps = HYPOTHESIS_TOL * (1.0 + inst.b);
    let mut cert = cert;
    cert.set("sup_phi", sup);
    cert.set("bound", inst.b);
    cert.set("epsilon", eps);
    if sup > inst.b + eps {
        cert.outcome = Outcome::Fail {
            node: Some(worst),
            time: Some(grid.time(worst)),
            value: sup,
            detail: format!("φ = {sup} exceeds b = {}", inst.b),
        };
    }
    cert
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "snake_case")]
pub enum SuiteInstance {
    Linear(LinearInstance),
    Local(LocalInstance),
    SmallData(SmallDataInstance),
}

impl SuiteInstance {
    pub fn certify(&self) -> Certificate {
        match self {
            SuiteInstance::Linear(i) => gronwall_linear(i),
            SuiteInstance::Local(i) => gronwall_local(i),
            SuiteInstance::SmallData(i) => gronwall_small(i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub rejected: usize,
    pub certificates: Vec<Certificate>,
}

impl SuiteSummary {
    pub fn run(instances: &[SuiteInstance]) -> Self {
        let certificates: Vec<Certificate> = instances.iter().map(SuiteInstance::certify).collect();
        let count = |f: fn(&Outcome) -> bool| certificates.iter().filter(|c| f(&c.outcome)).count();
        Self {
            total: certificates.len(),
            passed: count(Outcome::is_pass),
            failed: count(Outcome::is_fail),
            rejected: count(Outcome::is_reject),
            certificates,
        }
    }
}

const SUITE_STEPS: usize = 200;

fn random_kernel(rng: &mut ChaCha8Rng, tau: f64, horizon: f64) -> Kernel {
    loop {
        let g = match rng.gen_range(0..3) {
            0 => Kernel::PowerLaw {
                coeff: rng.gen_range(0.1..1.5),
                exponent: rng.gen_range(0.0..0.7),
            },
            1 => Kernel::Exponential {
                coeff: rng.gen_range(0.1..3.0),
                rate: rng.gen_range(0.0..3.0),
            },
            _ => Kernel::Constant {
                value: rng.gen_range(0.1..2.0),
            },
        };
        let bracketed = weighted_mass(&g, BISECTION_BRACKET.1, horizon) <= 0.5;
        if g.antiderivative(tau) < 0.5 && bracketed {
            return g;
        }
    }
}

fn random_linear(rng: &mut ChaCha8Rng) -> LinearInstance {
    let horizon = rng.gen_range(0.5..2.0);
    let grid = TimeGrid::new(horizon, SUITE_STEPS).expect("positive horizon");
    let g = random_kernel(rng, grid.tau(), horizon);
    let level = rng.gen_range(0.0..1.0);
    let h: Vec<f64> = match rng.gen_range(0..3) {
        0 => vec![level; grid.nodes()],
        1 => (0..grid.nodes()).map(|_| rng.gen_range(0.0..1.0)).collect(),
        _ => {
            let freq = rng.gen_range(0.5..6.0);
            grid.times().iter().map(|t| level * (1.0 + (freq * t).sin())).collect()
        }
    };
    let exponent = [Some(1.0), Some(2.0), Some(3.5), None][rng.gen_range(0..4)];
    LinearInstance::from_equality(grid, h, g, exponent).expect("leading weight below 1/2")
}

fn random_local(rng: &mut ChaCha8Rng) -> LocalInstance {
    let horizon = rng.gen_range(0.5..2.0);
    let grid = TimeGrid::new(horizon, SUITE_STEPS).expect("positive horizon");
    let g = random_kernel(rng, grid.tau(), horizon);
    let a = rng.gen_range(0.0..2.0);
    let growth = if rng.gen_bool(0.5) {
        ScalarMap::Polynomial {
            coeffs: vec![
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..1.0),
            ],
        }
    } else {
        ScalarMap::Power {
            coeff: rng.gen_range(0.1..2.0),
            exponent: rng.gen_range(0.5..3.0),
        }
    };
    if rng.gen_bool(0.2) {
        LocalInstance::staircase(grid, a, growth, g, rng.gen_range(2..20))
    } else {
        LocalInstance::picard(grid, a, growth, g, rng.gen_range(1..25))
    }
}

fn random_small(rng: &mut ChaCha8Rng) -> SmallDataInstance {
    let horizon = rng.gen_range(0.5..2.0);
    let grid = TimeGrid::new(horizon, SUITE_STEPS).expect("positive horizon");
    let g = random_kernel(rng, grid.tau(), horizon);
    let b = rng.gen_range(0.01..0.5);
    let delta = b * rng.gen_range(1.5..4.0);
    let nonlinearity = if rng.gen_bool(0.5) {
        // c₂ r² - c₁ r vanishes at c₁/c₂ ≥ δ; sublinear decay would reach 0 in
        // finite time and overshoot below it on the grid
        let c1 = rng.gen_range(0.1..2.0);
        let root = delta * rng.gen_range(1.0..2.0);
        ScalarMap::Polynomial {
            coeffs: vec![0.0, -c1, c1 / root],
        }
    } else {
        ScalarMap::Power {
            coeff: -rng.gen_range(0.1..2.0),
            exponent: rng.gen_range(1.0..2.0),
        }
    };
    SmallDataInstance::from_equality(grid, b, delta, nonlinearity, g)
}

/// `per_lemma` instances of each lemma, satisfying their hypotheses by
/// construction.
pub fn random_suite(seed: u64, per_lemma: usize) -> Vec<SuiteInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * per_lemma);
    for _ in 0..per_lemma {
        out.push(SuiteInstance::Linear(random_linear(&mut rng)));
    }
    for _ in 0..per_lemma {
        out.push(SuiteInstance::Local(random_local(&mut rng)));
    }
    for _ in 0..per_lemma {
        out.push(SuiteInstance::SmallData(random_small(&mut rng)));
    }
    out
}

/// Ten instances that each break a hypothesis of their lemma.
pub fn handcrafted_violations() -> Vec<SuiteInstance> {
    let grid = TimeGrid::new(1.0, 100).expect("valid grid");
    let n = grid.nodes();
    let one = Kernel::constant(1.0);
    let ok_linear = LinearInstance::from_equality(grid, vec![0.5; n], one.clone(), None).expect("small weight");

    let mut above_h = ok_linear.clone();
    above_h.phi.iter_mut().for_each(|v| *v += 0.25);

    let mut negative_h = ok_linear.clone();
    negative_h.h[40] = -0.1;

    let mut doubled = ok_linear.clone();
    doubled.phi.iter_mut().for_each(|v| *v *= 2.0);

    let no_memory = LinearInstance {
        grid,
        phi: vec![1.0; n],
        h: vec![0.5; n],
        g: Kernel::Zero,
        exponent: Some(2.0),
    };

    let affine = ScalarMap::Polynomial { coeffs: vec![1.0, 1.0] };
    let mut negative_a = LocalInstance::picard(grid, 0.0, affine.clone(), one.clone(), 5);
    negative_a.a = -0.5;

    let decreasing = LocalInstance {
        grid,
        phi: vec![0.0; n],
        a: 0.0,
        growth: ScalarMap::Table {
            points: vec![[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]],
        },
        g: one.clone(),
    };

    let mut lifted = LocalInstance::picard(grid, 0.0, affine, Kernel::constant(0.01), 5);
    lifted.phi.iter_mut().for_each(|v| *v += 0.5);

    let quad = ScalarMap::Polynomial {
        coeffs: vec![0.0, -1.0, 1.0],
    };
    let mut b_above_delta = SmallDataInstance::from_equality(grid, 0.1, 1.0, quad.clone(), one.clone());
    b_above_delta.b = 1.5;

    let positive_n = SmallDataInstance::from_equality(
        grid,
        0.1,
        1.0,
        ScalarMap::Polynomial {
            coeffs: vec![0.0, -0.5, 1.0],
        },
        one.clone(),
    );

    let mut above_b = SmallDataInstance::from_equality(grid, 0.1, 1.0, quad, one);
    above_b.phi.iter_mut().for_each(|v| *v += 0.2);

    vec![
        SuiteInstance::Linear(above_h),
        SuiteInstance::Linear(negative_h),
        SuiteInstance::Linear(doubled),
        SuiteInstance::Linear(no_memory),
        SuiteInstance::Local(negative_a),
        SuiteInstance::Local(decreasing),
        SuiteInstance::Local(lifted),
        SuiteInstance::SmallData(b_above_delta),
        SuiteInstance::SmallData(positive_n),
        SuiteInstance::SmallData(above_b),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_mass_of_unit_kernel() {
        let m = 1.5936_f64;
        let exact = (1.0 - (-m).exp()) / m;
        assert!((weighted_mass(&Kernel::constant(1.0), m, 1.0) - exact).abs() < 1e-12);
    }

    #[test]
    fn unit_kernel_exponent() {
        // root of (1 - e^{-M})/M = 1/2
        let m = weight_exponent(&Kernel::constant(1.0), 1.0).unwrap();
        assert!((m - 1.593_624_260_040_040_3).abs() < 1e-9, "{m}");
    }

    #[test]
    fn no_memory_gives_factor_two() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let inst = LinearInstance::from_equality(grid, vec![0.3; 51], Kernel::Zero, Some(2.0)).unwrap();
        let cert = gronwall_linear(&inst);
        assert!(cert.outcome.is_pass());
        assert_eq!(cert.values["M"], 0.0);
        assert_eq!(cert.values["C0"], 2.0);
    }

    #[test]
    fn unit_data_sup_norm() {
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let inst = LinearInstance {
            grid,
            phi: vec![1.0; 201],
            h: vec![1.0; 201],
            g: Kernel::constant(1.0),
            exponent: None,
        };
        let cert = gronwall_linear(&inst);
        assert!(cert.outcome.is_pass(), "{cert:?}");
        assert!((cert.values["C0"] - 2.0 * 1.593_624_260_040_040_3f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn local_horizon_for_affine_growth() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let growth = ScalarMap::Polynomial { coeffs: vec![1.0, 1.0] };
        let inst = LocalInstance::picard(grid, 0.0, growth, Kernel::constant(1.0), 30);
        let cert = gronwall_local(&inst);
        assert!(cert.outcome.is_pass(), "{cert:?}");
        let r = cert.values["R"];
        assert!(r < 0.125 && r > 0.125 - 1e-12, "{r}");
    }

    #[test]
    fn local_without_memory_caps_at_horizon() {
        let grid = TimeGrid::new(2.0, 40).unwrap();
        let growth = ScalarMap::Power {
            coeff: 1.0,
            exponent: 2.0,
        };
        let inst = LocalInstance::picard(grid, 0.7, growth, Kernel::Zero, 3);
        let cert = gronwall_local(&inst);
        assert!(cert.outcome.is_pass());
        assert_eq!(cert.values["R"], 2.0);
    }

    #[test]
    fn staircase_passes() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let growth = ScalarMap::Polynomial { coeffs: vec![1.0, 1.0] };
        let inst = LocalInstance::staircase(grid, 0.0, growth, Kernel::constant(1.0), 16);
        assert!(inst.phi.windows(2).any(|w| w[1] > w[0]));
        assert!(gronwall_local(&inst).outcome.is_pass());
    }

    #[test]
    fn small_data_quadratic() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let n = ScalarMap::Polynomial {
            coeffs: vec![0.0, -1.0, 1.0],
        };
        let inst = SmallDataInstance::from_equality(grid, 0.1, 1.0, n, Kernel::constant(1.0));
        let cert = gronwall_small(&inst);
        assert!(cert.outcome.is_pass(), "{cert:?}");
        assert!(cert.values["sup_phi"] <= 0.1 + 1e-10);
    }

    #[test]
    fn small_data_premise_gate() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let inst =
            SmallDataInstance::from_equality(grid, 1.0, 1.0, ScalarMap::Polynomial { coeffs: vec![] }, Kernel::Zero);
        assert!(gronwall_small(&inst).outcome.is_reject());
    }

    #[test]
    fn suites_certify() {
        let summary = SuiteSummary::run(&random_suite(7, 30));
        assert_eq!(
            summary.passed,
            90,
            "{:?}",
            summary.certificates.iter().find(|c| !c.outcome.is_pass())
        );
        let bad = SuiteSummary::run(&handcrafted_violations());
        assert_eq!(
            bad.rejected,
            10,
            "{:?}",
            bad.certificates.iter().find(|c| !c.outcome.is_reject())
        );
    }

    #[test]
    fn table_map_interpolates() {
        let t = ScalarMap::Table {
            points: vec![[0.0, 0.0], [1.0, 2.0], [2.0, 3.0]],
        };
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(3.0), 4.0);
    }
}
