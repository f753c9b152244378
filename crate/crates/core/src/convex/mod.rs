//! Convex functionals on a weighted Euclidean space, their resolvents,
//! Yosida approximations and Moreau–Yosida envelopes.

mod audit;
mod builtin;
mod newton;

pub use audit::{audit_pair, audit_random, gradient_mismatch, AuditSummary, PairAudit};
pub use builtin::{PowerPotential, Quadratic};
pub use newton::{newton_prox, Smooth};

use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("inner solver stopped after {iterations} iterations with residual {residual:e}")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("state has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state has non-finite entries")]
    NotFinite,
}

/// `ℝ^dim` with inner product `⟨x, y⟩ = weight · Σ xᵢ yᵢ`.
///
/// For grid realizations of `L²(Ω)` the weight is the cell volume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub dim: usize,
    pub weight: f64,
}

impl Space {
    pub fn euclidean(dim: usize) -> Self {
        Self { dim, weight: 1.0 }
    }

    pub fn weighted(dim: usize, weight: f64) -> Self {
        Self { dim, weight }
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weight * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.norm_sq(x).sqrt()
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        (self.weight * s).sqrt()
    }

    pub fn check(&self, x: &[f64]) -> Result<(), ConvexError> {
        if x.len() != self.dim {
            return Err(ConvexError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ConvexError::NotFinite);
        }
        Ok(())
    }
}

/// Output of a resolvent solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Prox {
    pub point: Vec<f64>,
    /// `‖(z - w)/λ + g‖` for the subgradient `g` returned by the functional.
    pub residual: f64,
    pub iterations: usize,
}

/// A proper, convex, lower semicontinuous functional on a [`Space`].
pub trait Functional: Debug + Send + Sync {
    fn space(&self) -> Space;

    /// `φ(w)`, `+∞` outside the effective domain.
    fn value(&self, w: &[f64]) -> f64;

    /// Writes an element of `∂φ(w)` (Riesz representative in the weighted
    /// inner product) into `out`.
    fn subgradient(&self, w: &[f64], out: &mut [f64]);

    /// `J_λ(w) = argmin_z ‖w - z‖²/(2λ) + φ(z)`.
    fn resolvent(&self, lambda: f64, w: &[f64], tol: f64) -> Result<Prox, ConvexError>;

    fn in_domain(&self, w: &[f64]) -> bool {
        self.value(w).is_finite()
    }

    fn name(&self) -> String;
}

fn check_lambda(lambda: f64) -> Result<(), ConvexError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ConvexError::InvalidParameter(format!(
            "resolvent parameter must be positive, got {lambda}"
        )));
    }
    Ok(())
}

/// `‖(z - w)/λ + ∂φ(z)‖` using the functional's subgradient selection.
pub fn optimality_residual(phi: &dyn Functional, lambda: f64, w: &[f64], z: &[f64]) -> f64 {
    let space = phi.space();
    let mut g = vec![0.0; space.dim];
    phi.subgradient(z, &mut g);
    for ((gi, zi), wi) in g.iter_mut().zip(z).zip(w) {
        *gi += (zi - wi) / lambda;
    }
    space.norm(&g)
}

/// Validated entry point for [`Functional::resolvent`].
pub fn resolvent(phi: &dyn Functional, lambda: f64, w: &[f64], tol: f64) -> Result<Prox, ConvexError> {
    check_lambda(lambda)?;
    phi.space().check(w)?;
    phi.resolvent(lambda, w, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct YosidaEval {
    pub lambda: f64,
    /// `J_λ(w)`.
    pub resolvent: Vec<f64>,
    /// `A_λ(w) = (w - J_λ w)/λ`.
    pub yosida: Vec<f64>,
    /// `φ_λ(w) = (λ/2)‖A_λ w‖² + φ(J_λ w)`.
    pub envelope: f64,
    pub residual: f64,
}

pub fn yosida(phi: &dyn Functional, lambda: f64, w: &[f64], tol: f64) -> Result<YosidaEval, ConvexError> {
    let prox = resolvent(phi, lambda, w, tol)?;
    let yosida: Vec<f64> = w.iter().zip(&prox.point).map(|(wi, zi)| (wi - zi) / lambda).collect();
    let space = phi.space();
    let envelope = 0.5 * lambda * space.norm_sq(&yosida) + phi.value(&prox.point);
    Ok(YosidaEval {
        lambda,
        resolvent: prox.point,
        yosida,
        envelope,
        residual: prox.residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSection {
    /// Last Yosida value along the sequence.
    pub value: Vec<f64>,
    /// `‖A_{λ_{i+1}} w - A_{λ_i} w‖` for consecutive parameters.
    pub increments: Vec<f64>,
    /// Parameter at which the increments first fell below the tolerance.
    pub lambda: f64,
    /// False when the sequence never became Cauchy, which suggests `w` lies
    /// outside the domain of `∂φ`.
    pub converged: bool,
}

/// Follows `A_λ(w)` along a decreasing parameter sequence until successive
/// values differ by less than `tol`.
pub fn minimal_section(
    phi: &dyn Functional,
    w: &[f64],
    lambdas: &[f64],
    tol: f64,
) -> Result<MinimalSection, ConvexError> {
    if lambdas.is_empty() {
        return Err(ConvexError::InvalidParameter("empty parameter sequence".into()));
    }
    if lambdas.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(ConvexError::InvalidParameter(
            "parameter sequence must be strictly decreasing".into(),
        ));
    }
    let space = phi.space();
    let inner_tol = (tol * 1e-3).max(1e-13);
    let mut prev = yosida(phi, lambdas[0], w, inner_tol * lambdas[0])?.yosida;
    let mut increments = Vec::new();
    for &lambda in &lambdas[1..] {
        let next = yosida(phi, lambda, w, inner_tol * lambda)?.yosida;
        let inc = space.dist(&next, &prev);
        increments.push(inc);
        prev = next;
        if inc < tol {
            return Ok(MinimalSection {
                value: prev,
                increments,
                lambda,
                converged: true,
            });
        }
    }
    Ok(MinimalSection {
        value: prev,
        increments,
        lambda: *lambdas.last().unwrap(),
        converged: false,
    })
}

/// `10^{-k}` for `k = 0..count`.
pub fn geometric_lambdas(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start * ratio.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_prox_halves() {
        let phi = Quadratic::new(Space::euclidean(3));
        let prox = resolvent(&phi, 1.0, &[2.0, -4.0, 1.0], 1e-12).unwrap();
        assert_eq!(prox.point, vec![1.0, -2.0, 0.5]);
        assert_eq!(prox.residual, 0.0);
    }

    #[test]
    fn quadratic_yosida_closed_form() {
        let phi = Quadratic::new(Space::euclidean(2));
        let w = [3.0, 4.0];
        let y = yosida(&phi, 1.0, &w, 1e-12).unwrap();
        assert_eq!(y.yosida, vec![1.5, 2.0]);
        assert_relative_eq!(y.envelope, 25.0 / 4.0, max_relative = 1e-15);
    }

    #[test]
    fn envelope_increases_toward_value() {
        let phi = PowerPotential::new(Space::euclidean(3), 4.0).unwrap();
        let w = [1.2, -0.7, 0.3];
        let mut last = f64::NEG_INFINITY;
        for lambda in [1.0, 0.1, 0.01] {
            let env = yosida(&phi, lambda, &w, 1e-13).unwrap().envelope;
            assert!(env >= last);
            assert!(env <= phi.value(&w) + 1e-14);
            last = env;
        }
        assert_relative_eq!(last, phi.value(&w), max_relative = 0.05);
    }

    #[test]
    fn rejects_bad_inputs() {
        let phi = Quadratic::new(Space::euclidean(2));
        assert!(matches!(
            resolvent(&phi, 0.0, &[1.0, 1.0], 1e-10),
            Err(ConvexError::InvalidParameter(_))
        ));
        assert!(matches!(
            resolvent(&phi, 1.0, &[1.0], 1e-10),
            Err(ConvexError::DimensionMismatch { .. })
        ));
        assert_eq!(
            resolvent(&phi, 1.0, &[f64::NAN, 1.0], 1e-10),
            Err(ConvexError::NotFinite)
        );
    }

    #[test]
    fn minimal_section_smooth_cases() {
        let lambdas = geometric_lambdas(1.0, 0.1, 10);
        let quad = Quadratic::new(Space::euclidean(2));
        let w = [0.3, -1.1];
        let ms = minimal_section(&quad, &w, &lambdas, 1e-6).unwrap();
        assert!(ms.converged);
        for (a, b) in ms.value.iter().zip(&w) {
            assert_relative_eq!(a, b, epsilon = 1e-5);
        }

        let pow = PowerPotential::new(Space::euclidean(3), 4.0).unwrap();
        let w = [0.5, -1.0, 2.0];
        let ms = minimal_section(&pow, &w, &lambdas, 1e-6).unwrap();
        assert!(ms.converged);
        for (a, b) in ms.value.iter().zip(&w) {
            assert_relative_eq!(*a, b * b * b, epsilon = 1e-4);
        }
    }

    #[test]
    fn minimal_section_rejects_increasing_sequence() {
        let quad = Quadratic::new(Space::euclidean(1));
        assert!(minimal_section(&quad, &[1.0], &[0.1, 1.0], 1e-6).is_err());
    }
}
