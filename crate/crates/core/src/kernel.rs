//! Kernel calculus on uniform time grids.
//!
//! Convolutions `(g * w)(t) = ∫₀ᵗ g(t - s) w(s) ds` are computed by product
//! integration: the path `w` is reconstructed as a step function taking the
//! value `w_i` on `(t_{i-1}, t_i]` and the kernel is integrated exactly over
//! each cell through its antiderivative. Singular kernels are therefore never
//! evaluated at `t = 0`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("order {0} outside the open interval (0, 1)")]
    InvalidOrder(f64),
    #[error("invalid time grid (horizon {horizon}, steps {steps})")]
    InvalidGrid { horizon: f64, steps: usize },
    #[error("path has {got} samples but the grid has {expected} nodes")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("regularization index must be at least 1")]
    InvalidIndex,
    #[error("invalid kernel table: {0}")]
    InvalidTable(String),
    #[error("invalid kernel parameters: {0}")]
    InvalidParameters(String),
    #[error("monotonicity violated at t = {t} (defect {defect:e})")]
    NotMonotone { t: f64, defect: f64 },
}

/// Uniform grid `t_j = j·τ`, `τ = T/N`, `j = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    horizon: f64,
    steps: usize,
}

impl TryFrom<GridSpec> for TimeGrid {
    type Error = KernelError;

    fn try_from(s: GridSpec) -> Result<Self, KernelError> {
        TimeGrid::new(s.horizon, s.steps)
    }
}

impl From<TimeGrid> for GridSpec {
    fn from(g: TimeGrid) -> Self {
        GridSpec {
            horizon: g.horizon,
            steps: g.steps,
        }
    }
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, KernelError> {
        if !(horizon.is_finite() && horizon > 0.0) || steps == 0 {
            return Err(KernelError::InvalidGrid { horizon, steps });
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `N + 1`.
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.tau()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.time(j)).collect()
    }

    /// The grid with twice as many steps over the same horizon.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            horizon: self.horizon,
            steps: self.steps * 2,
        }
    }

    pub(crate) fn check_path(&self, len: usize) -> Result<(), KernelError> {
        if len != self.nodes() {
            return Err(KernelError::ShapeMismatch {
                expected: self.nodes(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Piecewise-linear kernel through `(t_i, k_i)` with `t_0 = 0`, extended by
/// its last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableSamples", into = "TableSamples")]
pub struct KernelTable {
    times: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSamples {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<TableSamples> for KernelTable {
    type Error = KernelError;

    fn try_from(s: TableSamples) -> Result<Self, KernelError> {
        KernelTable::new(s.times, s.values)
    }
}

impl From<KernelTable> for TableSamples {
    fn from(t: KernelTable) -> Self {
        TableSamples {
            times: t.times,
            values: t.values,
        }
    }
}

impl KernelTable {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, KernelError> {
        if times.len() != values.len() {
            return Err(KernelError::InvalidTable(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(KernelError::InvalidTable("need at least two samples".into()));
        }
        if times[0] != 0.0 {
            return Err(KernelError::InvalidTable("first sample must sit at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(KernelError::InvalidTable(
                "times must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::InvalidTable("values must be finite".into()));
        }
        let mut cumulative = Vec::with_capacity(times.len());
        cumulative.push(0.0);
        for i in 1..times.len() {
            let area = 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
            cumulative.push(cumulative[i - 1] + area);
        }
        Ok(Self {
            times,
            values,
            cumulative,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, t: f64) -> usize {
        // index i with times[i] <= t < times[i + 1]
        self.times
            .partition_point(|x| *x <= t)
            .saturating_sub(1)
            .min(self.times.len() - 2)
    }

    fn eval(&self, t: f64) -> f64 {
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.values[last];
        }
        let i = self.locate(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let s = (t - t0) / (t1 - t0);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    fn antiderivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.cumulative[last] + self.values[last] * (t - self.times[last]);
        }
        let i = self.locate(t);
        let t0 = self.times[i];
        let v = self.eval(t);
        self.cumulative[i] + 0.5 * (self.values[i] + v) * (t - t0)
    }
}

/// A scalar kernel on `(0, ∞)` with closed-form antiderivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    /// `k ≡ 0`. Used to switch the nonlocal term off.
    Zero,
    Constant {
        value: f64,
    },
    /// `coeff · t^(-exponent)` with `0 ≤ exponent < 1`.
    PowerLaw {
        coeff: f64,
        exponent: f64,
    },
    /// `coeff · exp(-rate·t)`.
    Exponential {
        coeff: f64,
        rate: f64,
    },
    Tabulated(KernelTable),
}

impl Kernel {
    /// `t^(-α) / Γ(1 - α)`.
    pub fn riemann_liouville(order: f64) -> Result<Kernel, KernelError> {
        if !(order > 0.0 && order < 1.0) {
            return Err(KernelError::InvalidOrder(order));
        }
        Ok(Kernel::PowerLaw {
            coeff: 1.0 / gamma(1.0 - order),
            exponent: order,
        })
    }

    pub fn constant(value: f64) -> Kernel {
        Kernel::Constant { value }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |msg: &str| Err(KernelError::InvalidParameters(msg.to_string()));
        match self {
            Kernel::Zero => Ok(()),
            Kernel::Constant { value } if !(value.is_finite() && *value >= 0.0) => {
                bad("constant kernel must be finite and nonnegative")
            }
            Kernel::PowerLaw { coeff, exponent }
                if !(coeff.is_finite() && *coeff >= 0.0 && *exponent >= 0.0 && *exponent < 1.0) =>
            {
                bad("power-law kernel needs coeff >= 0 and exponent in [0, 1)")
            }
            Kernel::Exponential { coeff, rate }
                if !(coeff.is_finite() && *coeff >= 0.0 && rate.is_finite() && *rate >= 0.0) =>
            {
                bad("exponential kernel needs coeff >= 0 and rate >= 0")
            }
            Kernel::Tabulated(table) => {
                if table.values.iter().any(|v| *v < 0.0) {
                    return bad("tabulated kernel must be nonnegative");
                }
                if table.values.windows(2).any(|w| w[1] > w[0]) {
                    return bad("tabulated kernel must be nonincreasing");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Pointwise value for `t > 0`. Singular kernels return `+∞` at 0.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Constant { value } => *value,
            Kernel::PowerLaw { coeff, exponent } => {
                if *exponent == 0.0 {
                    *coeff
                } else if t <= 0.0 {
                    f64::INFINITY
                } else {
                    coeff * t.powf(-exponent)
                }
            }
            Kernel::Exponential { coeff, rate } => coeff * (-rate * t).exp(),
            Kernel::Tabulated(table) => table.eval(t),
        }
    }

    /// `∫₀ᵗ k(s) ds`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Kernel::Zero => 0.0,
            Kernel::Constant { value } => value * t,
            Kernel::PowerLaw { coeff, exponent } => {
                let e = 1.0 - exponent;
                coeff * t.powf(e) / e
            }
            Kernel::Exponential { coeff, rate } => {
                if *rate == 0.0 {
                    coeff * t
                } else {
                    coeff * (-(-rate * t).exp_m1()) / rate
                }
            }
            Kernel::Tabulated(table) => table.antiderivative(t),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, Kernel::PowerLaw { exponent, .. } if *exponent > 0.0)
    }

    /// Checks nonnegativity and monotonicity of `k` on the positive nodes of
    /// `grid` and monotonicity of `K` on all nodes.
    pub fn check_on_grid(&self, grid: &TimeGrid) -> Result<(), KernelError> {
        let tol = 1e-12;
        let mut prev_k = f64::INFINITY;
        let mut prev_big = 0.0_f64;
        for j in 1..grid.nodes() {
            let t = grid.time(j);
            let k = self.eval(t);
            if k < 0.0 {
                return Err(KernelError::NotMonotone { t, defect: -k });
            }
            if k > prev_k * (1.0 + tol) + tol {
                return Err(KernelError::NotMonotone { t, defect: k - prev_k });
            }
            let big = self.antiderivative(t);
            if big < prev_big - tol * (1.0 + prev_big.abs()) {
                return Err(KernelError::NotMonotone {
                    t,
                    defect: prev_big - big,
                });
            }
            prev_k = k;
            prev_big = big;
        }
        Ok(())
    }
}

/// A conjugate pair with `k * ℓ ≡ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoninePair {
    pub k: Kernel,
    pub l: Kernel,
    /// Riemann–Liouville order, when the pair is `(k_α, k_{1-α})`.
    pub order: Option<f64>,
}

impl SoninePair {
    pub fn new(k: Kernel, l: Kernel) -> Result<Self, KernelError> {
        k.validate()?;
        l.validate()?;
        Ok(Self { k, l, order: None })
    }
}

/// `k(t) = t^(-α)/Γ(1-α)` paired with `ℓ(t) = t^(α-1)/Γ(α)`.
pub fn rl_pair(order: f64) -> Result<SoninePair, KernelError> {
    let k = Kernel::riemann_liouville(order)?;
    let l = Kernel::riemann_liouville(1.0 - order)?;
    Ok(SoninePair {
        k,
        l,
        order: Some(order),
    })
}

/// Product-integration weights `w_{j,i} = K(t_j - t_{i-1}) - K(t_j - t_i)`.
///
/// On a uniform grid the weight depends on the lag `j - i` only, so a single
/// vector `a_m = K((m+1)τ) - K(mτ)` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvWeights {
    tau: f64,
    lags: Vec<f64>,
}

impl ConvWeights {
    pub fn new(kernel: &Kernel, grid: &TimeGrid) -> Self {
        let tau = grid.tau();
        let mut prev = 0.0;
        let lags = (0..grid.steps())
            .map(|m| {
                let next = kernel.antiderivative((m + 1) as f64 * tau);
                let a = next - prev;
                prev = next;
                a
            })
            .collect();
        Self { tau, lags }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `a_m`, the weight attached to the cell `m` steps behind the current node.
    pub fn lag(&self, m: usize) -> f64 {
        self.lags[m]
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    /// `w_{j,i}` for `1 ≤ i ≤ j`.
    pub fn weight(&self, j: usize, i: usize) -> f64 {
        debug_assert!(1 <= i && i <= j);
        self.lags[j - i]
    }

    /// Weight of the current cell, `K(τ)`.
    pub fn leading(&self) -> f64 {
        self.lags[0]
    }

    pub fn row_sum(&self, j: usize) -> f64 {
        self.lags[..j].iter().sum()
    }
}

/// `(g * w)(t_j)` for a scalar path sampled on all nodes. The value at node
/// 0 is ignored and the output at node 0 is 0.
pub fn convolve(g: &Kernel, path: &[f64], grid: &TimeGrid) -> Result<Vec<f64>, KernelError> {
    grid.check_path(path.len())?;
    let weights = ConvWeights::new(g, grid);
    Ok(convolve_with(&weights, path))
}

pub(crate) fn convolve_with(weights: &ConvWeights, path: &[f64]) -> Vec<f64> {
    let n = path.len() - 1;
    let mut out = vec![0.0; n + 1];
    for j in 1..=n {
        out[j] = (1..=j).map(|i| weights.weight(j, i) * path[i]).sum();
    }
    out
}

/// Vector-valued version of [`convolve`]; rows are node states.
pub fn convolve_states(g: &Kernel, path: &[Vec<f64>], grid: &TimeGrid) -> Result<Vec<Vec<f64>>, KernelError> {
    grid.check_path(path.len())?;
    let weights = ConvWeights::new(g, grid);
    let dim = path.first().map_or(0, Vec::len);
    let n = grid.steps();
    let mut out = vec![vec![0.0; dim]; n + 1];
    for j in 1..=n {
        for i in 1..=j {
            let w = weights.weight(j, i);
            for (o, x) in out[j].iter_mut().zip(&path[i]) {
                *o += w * x;
            }
        }
    }
    Ok(out)
}

/// `(g * h)(t_j)` for two kernels. The second factor enters through its cell
/// averages `(H(t_i) - H(t_{i-1}))/τ`, so neither factor is evaluated at 0.
pub fn convolve_kernels(g: &Kernel, h: &Kernel, grid: &TimeGrid) -> Vec<f64> {
    let tau = grid.tau();
    let mut averages = vec![0.0; grid.nodes()];
    let mut prev = 0.0;
    for (i, avg) in averages.iter_mut().enumerate().skip(1) {
        let next = h.antiderivative(grid.time(i));
        *avg = (next - prev) / tau;
        prev = next;
    }
    let weights = ConvWeights::new(g, grid);
    convolve_with(&weights, &averages)
}

/// Width of the initial layer, as a fraction of the horizon, excluded from
/// the Sonine error. Node-indexed errors of self-similar pairs do not depend
/// on τ, so only errors at fixed positive times can converge.
pub const SONINE_LAYER_FRACTION: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SonineCertificate {
    pub coarse_steps: usize,
    pub fine_steps: usize,
    pub layer: f64,
    pub coarse_error: f64,
    pub fine_error: f64,
    pub observed_order: f64,
    /// Node time of the worst error on the fine grid.
    pub worst_time: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn sonine_error(pair: &SoninePair, grid: &TimeGrid, layer: f64) -> (f64, f64) {
    let conv = convolve_kernels(&pair.k, &pair.l, grid);
    let mut worst = (0.0, f64::NAN);
    for (j, value) in conv.iter().enumerate().skip(1) {
        let t = grid.time(j);
        if t + 1e-12 * grid.horizon() < layer {
            continue;
        }
        let err = (value - 1.0).abs();
        if !(err <= worst.0) {
            worst = (err, t);
        }
    }
    worst
}

/// Measures `max_j |(k*ℓ)(t_j) - 1|` on `grid` and on its refinement.
pub fn verify_sonine(pair: &SoninePair, grid: &TimeGrid, tol: f64) -> SonineCertificate {
    verify_sonine_with_layer(pair, grid, tol, SONINE_LAYER_FRACTION * grid.horizon())
}

pub fn verify_sonine_with_layer(pair: &SoninePair, grid: &TimeGrid, tol: f64, layer: f64) -> SonineCertificate {
    let fine = grid.refined();
    let (coarse_error, _) = sonine_error(pair, grid, layer);
    let (fine_error, worst_time) = sonine_error(pair, &fine, layer);
    let observed_order = (coarse_error / fine_error).log2();
    SonineCertificate {
        coarse_steps: grid.steps(),
        fine_steps: fine.steps(),
        layer,
        coarse_error,
        fine_error,
        observed_order,
        worst_time,
        tolerance: tol,
        passed: fine_error <= tol,
    }
}

/// Samples of `s_n` (solving `s_n + n(ℓ * s_n) = 1`) and of `k_n = n·s_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizedKernel {
    pub index: u32,
    pub grid: TimeGrid,
    pub s: Vec<f64>,
    pub k: Vec<f64>,
}

impl RegularizedKernel {
    /// `k_n` as a kernel: the step function taking `k_n(t_j)` on `(t_{j-1}, t_j]`
    /// is replaced by the piecewise-linear interpolant through the nodes.
    pub fn to_kernel(&self) -> Kernel {
        let table = KernelTable::new(self.grid.times(), self.k.clone()).expect("grid times are strictly increasing");
        Kernel::Tabulated(table)
    }

    /// `‖k_n - k‖_{L¹(0,T)}` with `k_n` taken as the step function
    /// `k_n(t_j)` on `(t_{j-1}, t_j]`. Each cell is integrated exactly through
    /// the antiderivative of `k`, splitting at the crossing point.
    pub fn l1_distance(&self, k: &Kernel) -> f64 {
        let mut total = 0.0;
        for j in 1..self.grid.nodes() {
            let (lo, hi) = (self.grid.time(j - 1), self.grid.time(j));
            total += cell_abs_difference(k, self.k[j], lo, hi);
        }
        total
    }
}

/// `∫_lo^hi |c - k(s)| ds` for nonincreasing `k`.
fn cell_abs_difference(k: &Kernel, c: f64, lo: f64, hi: f64) -> f64 {
    let big = |t: f64| k.antiderivative(t);
    let mass = big(hi) - big(lo);
    let k_lo = if lo > 0.0 || !k.is_singular() {
        k.eval(lo)
    } else {
        f64::INFINITY
    };
    let k_hi = k.eval(hi);
    if c >= k_lo {
        return c * (hi - lo) - mass;
    }
    if c <= k_hi {
        return mass - c * (hi - lo);
    }
    // k(lo) > c > k(hi): bisect for the crossing
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if k.eval(mid) > c {
            a = mid;
        } else {
            b = mid;
        }
    }
    let s = 0.5 * (a + b);
    (big(s) - big(lo) - c * (s - lo)) + (c * (hi - s) - (big(hi) - big(s)))
}

/// Solves `s + n(ℓ * s) = 1` by forward substitution with the
/// product-integration weights of `ℓ`.
pub fn regularized_kernel(l: &Kernel, n: u32, grid: &TimeGrid) -> Result<RegularizedKernel, KernelError> {
    if n == 0 {
        return Err(KernelError::InvalidIndex);
    }
    let nf = n as f64;
    let weights = ConvWeights::new(l, grid);
    let steps = grid.steps();
    let mut s = vec![0.0; steps + 1];
    s[0] = 1.0;
    let diag = 1.0 + nf * weights.leading();
    for j in 1..=steps {
        let history: f64 = (1..j).map(|i| weights.weight(j, i) * s[i]).sum();
        s[j] = (1.0 - nf * history) / diag;
    }
    let scale = 1e-10;
    for j in 1..=steps {
        let defect = (s[j] - s[j - 1]).max(-s[j]);
        if defect > scale {
            return Err(KernelError::NotMonotone {
                t: grid.time(j),
                defect,
            });
        }
    }
    let k = s.iter().map(|v| nf * v).collect();
    Ok(RegularizedKernel {
        index: n,
        grid: *grid,
        s,
        k,
    })
}

/// Discrete `ℬ(v) = d/dt (k * v)` by a backward difference of the
/// product-integrated convolution. Output at node 0 is zero.
pub fn nonlocal_derivative(k: &Kernel, path: &[Vec<f64>], grid: &TimeGrid) -> Result<Vec<Vec<f64>>, KernelError> {
    let conv = convolve_states(k, path, grid)?;
    let tau = grid.tau();
    let dim = path.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; dim]; grid.nodes()];
    for j in 1..grid.nodes() {
        for d in 0..dim {
            out[j][d] = (conv[j][d] - conv[j - 1][d]) / tau;
        }
    }
    Ok(out)
}

/// Scalar convenience wrapper around [`nonlocal_derivative`].
pub fn nonlocal_derivative_scalar(k: &Kernel, path: &[f64], grid: &TimeGrid) -> Result<Vec<f64>, KernelError> {
    let conv = convolve(k, path, grid)?;
    let tau = grid.tau();
    let mut out = vec![0.0; conv.len()];
    for j in 1..conv.len() {
        out[j] = (conv[j] - conv[j - 1]) / tau;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rl_values() {
        let pair = rl_pair(0.5).unwrap();
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        assert_relative_eq!(pair.k.eval(1.0), inv_sqrt_pi, max_relative = 1e-14);
        assert_relative_eq!(pair.k.antiderivative(1.0), 2.0 * inv_sqrt_pi, max_relative = 1e-14);

        let pair = rl_pair(0.25).unwrap();
        // ℓ = k_{0.75}: ℓ(1) = 1/Γ(0.25), Γ(0.25) = 3.625609908221908...
        assert_relative_eq!(pair.l.eval(1.0), 1.0 / 3.625_609_908_221_908, max_relative = 1e-13);
        // 1/Γ(0.25) from scipy.special.gamma
        assert_relative_eq!(pair.l.eval(1.0), 0.275_815_662_830_209_3, max_relative = 1e-13);
        // ℓ antiderivative t^α/Γ(1+α)
        assert_relative_eq!(
            pair.l.antiderivative(2.0),
            2f64.powf(0.25) / gamma(1.25),
            max_relative = 1e-13
        );
    }

    #[test]
    fn rl_rejects_bad_order() {
        for a in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(rl_pair(a).is_err(), "order {a}");
        }
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::INFINITY, 4).is_err());
        let g = TimeGrid::new(2.0, 8).unwrap();
        assert_eq!(g.time(8), 2.0);
        assert_eq!(g.nodes(), 9);
    }

    #[test]
    fn constant_path_is_exact() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let k = Kernel::riemann_liouville(0.5).unwrap();
        let ones = vec![1.0; grid.nodes()];
        let conv = convolve(&k, &ones, &grid).unwrap();
        for (j, c) in conv.iter().enumerate() {
            assert_relative_eq!(*c, k.antiderivative(grid.time(j)), max_relative = 1e-13);
        }
    }

    #[test]
    fn linear_path_against_constant_kernel() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let path: Vec<f64> = grid.times();
        let conv = convolve(&Kernel::constant(1.0), &path, &grid).unwrap();
        let tau = grid.tau();
        for (j, c) in conv.iter().enumerate() {
            let t = grid.time(j);
            assert!((c - t * t / 2.0).abs() <= t * tau, "node {j}");
        }
    }

    #[test]
    fn rl_half_with_itself_tends_to_one() {
        let k = Kernel::riemann_liouville(0.5).unwrap();
        let mut last = f64::INFINITY;
        for steps in [128, 256, 512] {
            let grid = TimeGrid::new(1.0, steps).unwrap();
            let conv = convolve_kernels(&k, &k, &grid);
            let err = (conv[steps] - 1.0).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn weights_partition_and_positivity() {
        let grid = TimeGrid::new(1.5, 100).unwrap();
        for k in [
            Kernel::riemann_liouville(0.3).unwrap(),
            Kernel::constant(2.0),
            Kernel::Exponential { coeff: 1.0, rate: 3.0 },
        ] {
            let w = ConvWeights::new(&k, &grid);
            assert!(w.lags().iter().all(|a| *a >= 0.0));
            for j in [1, 7, 100] {
                assert_relative_eq!(w.row_sum(j), k.antiderivative(grid.time(j)), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn sonine_certificate_fails_for_constant_pair() {
        let pair = SoninePair::new(Kernel::constant(1.0), Kernel::constant(1.0)).unwrap();
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let cert = verify_sonine(&pair, &grid, 1e-2);
        assert!(!cert.passed);
        // (k*ℓ)(t) = t, worst at t = 1/32 where |t - 1| is largest
        assert_relative_eq!(cert.fine_error, 1.0 - 1.0 / 32.0, max_relative = 1e-12);
    }

    #[test]
    fn sonine_rl_half() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let cert = verify_sonine(&rl_pair(0.5).unwrap(), &grid, 1e-2);
        assert!(cert.passed);
        assert!(cert.observed_order >= 0.5, "{cert:?}");
    }

    #[test]
    fn regularized_exponential_case() {
        let grid = TimeGrid::new(1.0, 1024).unwrap();
        let reg = regularized_kernel(&Kernel::constant(1.0), 2, &grid).unwrap();
        assert_eq!(reg.s[0], 1.0);
        assert_eq!(reg.k[0], 2.0);
        let worst = grid
            .times()
            .iter()
            .zip(&reg.s)
            .map(|(t, s)| (s - (-2.0 * t).exp()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 5e-3, "{worst}");
        assert_relative_eq!(reg.s[1024], 0.135_335_3, epsilon = 2.0 * grid.tau());
        assert_relative_eq!(reg.k[1024], 0.270_670_6, epsilon = 4.0 * grid.tau());
    }

    #[test]
    fn regularized_index_zero_rejected() {
        let grid = TimeGrid::new(1.0, 8).unwrap();
        assert_eq!(
            regularized_kernel(&Kernel::constant(1.0), 0, &grid),
            Err(KernelError::InvalidIndex)
        );
    }

    #[test]
    fn regularized_kernels_monotone() {
        let grid = TimeGrid::new(1.0, 512).unwrap();
        let pair = rl_pair(0.4).unwrap();
        for n in [1, 10, 100] {
            let reg = regularized_kernel(&pair.l, n, &grid).unwrap();
            assert!(reg.k.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(reg.k.iter().all(|v| *v >= 0.0));
            assert_eq!(reg.k[0], n as f64);
        }
    }

    #[test]
    fn l1_distance_of_exact_step() {
        // k ≡ 1 against the constant step 1 gives 0; against 3 gives 2T
        let grid = TimeGrid::new(2.0, 4).unwrap();
        let reg = RegularizedKernel {
            index: 1,
            grid,
            s: vec![3.0; 5],
            k: vec![3.0; 5],
        };
        assert_relative_eq!(reg.l1_distance(&Kernel::constant(1.0)), 4.0, max_relative = 1e-14);
        assert_relative_eq!(reg.l1_distance(&Kernel::constant(3.0)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn nonlocal_derivative_zero_and_constant() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let k = Kernel::riemann_liouville(0.4).unwrap();
        let zero = vec![vec![0.0; 3]; grid.nodes()];
        let out = nonlocal_derivative(&k, &zero, &grid).unwrap();
        assert!(out.iter().flatten().all(|v| *v == 0.0));

        let c = 2.5;
        let path = vec![c; grid.nodes()];
        let out = nonlocal_derivative_scalar(&k, &path, &grid).unwrap();
        for j in 1..grid.nodes() {
            let expected = c * (k.antiderivative(grid.time(j)) - k.antiderivative(grid.time(j - 1))) / grid.tau();
            assert_relative_eq!(out[j], expected, max_relative = 1e-10);
            // close to c·k(t_j) away from the origin
            if grid.time(j) > 0.5 {
                assert_relative_eq!(out[j], c * k.eval(grid.time(j)), max_relative = 0.05);
            }
        }
    }

    #[test]
    fn table_kernel_integrates_exactly() {
        let table = KernelTable::new(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.5]).unwrap();
        let k = Kernel::Tabulated(table);
        assert_relative_eq!(k.antiderivative(1.0), 1.5);
        assert_relative_eq!(k.antiderivative(2.0), 2.25);
        assert_relative_eq!(k.antiderivative(3.0), 2.75);
        assert_relative_eq!(k.eval(1.5), 0.75);
        assert!(k.validate().is_ok());
        assert!(KernelTable::new(vec![0.1, 1.0], vec![1.0, 1.0]).is_err());
        assert!(KernelTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn shape_mismatch_reported() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        assert_eq!(
            convolve(&Kernel::constant(1.0), &[1.0; 3], &grid),
            Err(KernelError::ShapeMismatch { expected: 5, got: 3 })
        );
    }
}
