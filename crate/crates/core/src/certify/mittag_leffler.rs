//! `E_α(z) = Σ z^k / Γ(αk + 1)` on the completely monotone branch `z ≤ 0`.
//!
//! The power series is summed while its largest term stays moderate.
//! Beyond that it cancels catastrophically, and the Laplace representation
//!
//! ```text
//! E_α(-t^α) = ∫₀^∞ e^{-rt} sin(απ) r^{α-1} / (π (r^{2α} + 2 r^α cos(απ) + 1)) dr
//! ```
//!
//! is integrated with the trapezoid rule after `r = e^y`. The integrand is
//! analytic in `y` and decays at both ends, so the rule converges
//! geometrically.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MittagLefflerError {
    #[error("order {0} outside (0, 1]")]
    Order(f64),
    #[error("argument {0} is positive or not finite")]
    Argument(f64),
}

/// Largest series term accepted before switching to the integral.
const SERIES_TERM_LIMIT: f64 = 1e4;

pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64, MittagLefflerError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(MittagLefflerError::Order(alpha));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(MittagLefflerError::Argument(z));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    let x = -z;
    match series(alpha, x) {
        Some(v) => Ok(v),
        None => Ok(laplace_integral(alpha, x)),
    }
}

/// `E_α(-t^α)`, the relaxation function of `∂_t^α u + u = 0`, `u(0) = 1`.
pub fn relaxation(alpha: f64, t: f64) -> Result<f64, MittagLefflerError> {
    mittag_leffler(alpha, -t.powf(alpha))
}

/// Series for `E_α(-x)`, or `None` when a term exceeds the limit.
fn series(alpha: f64, x: f64) -> Option<f64> {
    let lx = x.ln();
    let mut sum = 0.0;
    let mut peaked = false;
    let mut prev = f64::INFINITY;
    for k in 0..10_000usize {
        let kf = k as f64;
        let mag = (kf * lx - ln_gamma(alpha * kf + 1.0)).exp();
        if mag > SERIES_TERM_LIMIT {
            return None;
        }
        let term = if k % 2 == 0 { mag } else { -mag };
        sum += term;
        if mag < prev {
            peaked = true;
        }
        prev = mag;
        if peaked && k > 0 && mag <= 1e-17 * sum.abs().max(1e-300) {
            return Some(sum);
        }
    }
    Some(sum)
}

pub(crate) fn laplace_integral(alpha: f64, x: f64) -> f64 {
    let t = x.powf(1.0 / alpha);
    let (s, c) = (alpha * PI).sin_cos();
    let density = |y: f64| {
        let r = y.exp();
        let ra = (alpha * y).exp();
        // r · r^{α-1} = r^α, the Jacobian of r = e^y included
        (-r * t).exp() * ra * s / (PI * (ra * ra + 2.0 * ra * c + 1.0))
    };
    // left tail ~ e^{αy}; right tail ~ exp(-t e^y)
    let lo = -40.0 / alpha;
    let hi = (40.0 / t).ln().max(1.0) + 2.0;
    // the peak near r = 1 narrows like (1 - α) as α → 1
    let h = (0.02f64).min(0.05 * (1.0 - alpha));
    let n = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let mut sum = 0.5 * (density(lo) + density(hi));
    for i in 1..n {
        sum += density(lo + i as f64 * h);
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::erf::erfc;

    #[test]
    fn special_values() {
        for a in [0.1, 0.5, 0.9] {
            assert_eq!(mittag_leffler(a, 0.0).unwrap(), 1.0);
        }
        assert_relative_eq!(
            mittag_leffler(1.0, -1.0).unwrap(),
            0.367_879_441_171_442_3,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            mittag_leffler(0.5, -1.0).unwrap(),
            0.427_583_576_155_807,
            max_relative = 1e-12
        );
    }

    #[test]
    fn half_order_matches_erfc_identity() {
        // E_{1/2}(-x) = e^{x²} erfc(x)
        for x in [0.01f64, 0.3, 1.0, 2.5, 5.0, 9.0, 15.0, 20.0] {
            let expect = (x * x).exp() * erfc(x);
            let got = mittag_leffler(0.5, -x).unwrap();
            assert_relative_eq!(got, expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn series_and_integral_agree_at_switch() {
        for a in [0.2, 0.3, 0.5, 0.7, 0.9, 0.95] {
            for x in [0.5, 1.0, 2.0, 4.0] {
                if let Some(s) = series(a, x) {
                    let i = laplace_integral(a, x);
                    assert!((s - i).abs() <= 1e-8, "α={a} x={x}: {s} vs {i}");
                }
            }
        }
    }

    #[test]
    fn monotone_and_bounded() {
        for a in [0.1, 0.3, 0.5, 0.7, 0.99] {
            let mut last = 1.0;
            for k in 1..200 {
                let z = -0.25 * k as f64;
                let v = mittag_leffler(a, z).unwrap();
                assert!(v > 0.0 && v <= 1.0, "α={a} z={z} v={v}");
                assert!(v <= last + 1e-12, "α={a} z={z}");
                last = v;
            }
        }
    }

    #[test]
    fn large_argument_tail() {
        // E_α(-x) ≈ 1/(x Γ(1-α)) for large x
        for a in [0.3, 0.5, 0.7] {
            let x = 1e4;
            let approx = 1.0 / (x * statrs::function::gamma::gamma(1.0 - a));
            assert_relative_eq!(mittag_leffler(a, -x).unwrap(), approx, max_relative = 1e-3);
        }
    }

    #[test]
    fn rejects_outside_branch() {
        assert!(mittag_leffler(0.5, 1.0).is_err());
        assert!(mittag_leffler(0.0, -1.0).is_err());
        assert!(mittag_leffler(1.2, -1.0).is_err());
        assert!(mittag_leffler(0.5, f64::NEG_INFINITY).is_err());
    }
}
