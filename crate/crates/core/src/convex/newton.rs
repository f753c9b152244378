//! Damped Newton for resolvents of smooth convex functionals.

use super::{ConvexError, Functional, Prox, Space};

/// A functional with second-order information.
///
/// Hessian products are Riesz representatives in the weighted inner
/// product, so the Hessian is self-adjoint in that product.
pub trait Smooth: Functional {
    fn hessian_vec(&self, z: &[f64], v: &[f64], out: &mut [f64]);

    /// Diagonal of the Hessian, used as a preconditioner.
    fn hessian_diag(&self, z: &[f64], out: &mut [f64]);
}

const MAX_NEWTON: usize = 200;
const MAX_BACKTRACK: usize = 40;

struct Objective<'a, S: Smooth + ?Sized> {
    phi: &'a S,
    space: Space,
    lambda: f64,
    w: &'a [f64],
}

impl<S: Smooth + ?Sized> Objective<'_, S> {
    fn value(&self, z: &[f64]) -> f64 {
        let d: f64 = z.iter().zip(self.w).map(|(a, b)| (a - b) * (a - b)).sum();
        self.space.weight * d / (2.0 * self.lambda) + self.phi.value(z)
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        self.phi.subgradient(z, out);
        for ((o, zi), wi) in out.iter_mut().zip(z).zip(self.w) {
            *o += (zi - wi) / self.lambda;
        }
    }

    fn hess_vec(&self, z: &[f64], v: &[f64], out: &mut [f64]) {
        self.phi.hessian_vec(z, v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += vi / self.lambda;
        }
    }
}

/// Preconditioned conjugate gradients for `H d = rhs`, stopped at relative
/// residual `forcing`.
fn pcg<S: Smooth + ?Sized>(obj: &Objective<'_, S>, z: &[f64], rhs: &[f64], forcing: f64) -> Vec<f64> {
    let n = rhs.len();
    let mut diag = vec![0.0; n];
    obj.phi.hessian_diag(z, &mut diag);
    let precond: Vec<f64> = diag.iter().map(|d| 1.0 / (d + 1.0 / obj.lambda)).collect();

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut y: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut p = y.clone();
    let mut ry: f64 = r.iter().zip(&y).map(|(a, b)| a * b).sum();
    let target = forcing * rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut hp = vec![0.0; n];
    for _ in 0..(2 * n + 20) {
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= target {
            break;
        }
        obj.hess_vec(z, &p, &mut hp);
        let php: f64 = p.iter().zip(&hp).map(|(a, b)| a * b).sum();
        if !(php > 0.0) {
            break;
        }
        let alpha = ry / php;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        for i in 0..n {
            y[i] = r[i] * precond[i];
        }
        let ry_next: f64 = r.iter().zip(&y).map(|(a, b)| a * b).sum();
        let beta = ry_next / ry;
        ry = ry_next;
        for i in 0..n {
            p[i] = y[i] + beta * p[i];
        }
    }
    if x.iter().all(|v| *v == 0.0) {
        // CG made no progress; fall back to the preconditioned gradient
        return rhs.iter().zip(&precond).map(|(a, b)| a * b).collect();
    }
    x
}

/// Solves `(z - w)/λ + ∇φ(z) = 0` by damped Newton with a preconditioned
/// conjugate-gradient inner solve and a gradient fallback.
pub fn newton_prox<S: Smooth + ?Sized>(phi: &S, lambda: f64, w: &[f64], tol: f64) -> Result<Prox, ConvexError> {
    let space = phi.space();
    let obj = Objective { phi, space, lambda, w };
    let n = w.len();
    let mut z = w.to_vec();
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    obj.gradient(&z, &mut grad);
    let mut res = space.norm(&grad);
    let mut value = obj.value(&z);

    for it in 0..MAX_NEWTON {
        if res <= tol {
            return Ok(Prox {
                point: z,
                residual: res,
                iterations: it,
            });
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let forcing = (res / (1.0 + res)).sqrt().min(0.1);
        let mut dir = pcg(&obj, &z, &rhs, forcing);
        let mut slope = space.inner(&grad, &dir);
        if !(slope < 0.0) {
            dir = rhs;
            slope = -res * res;
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            for i in 0..n {
                trial[i] = z[i] + step * dir[i];
            }
            let trial_value = obj.value(&trial);
            if trial_value.is_finite() {
                obj.gradient(&trial, &mut trial_grad);
                let trial_res = space.norm(&trial_grad);
                let armijo = trial_value <= value + 1e-4 * step * slope;
                // near the solution the objective stalls in rounding while
                // the residual still contracts
                let flat = trial_value <= value + 4.0 * f64::EPSILON * value.abs().max(1.0) && trial_res < res;
                if armijo || flat {
                    z.copy_from_slice(&trial);
                    grad.copy_from_slice(&trial_grad);
                    res = trial_res;
                    value = trial_value;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(ConvexError::NonConvergence {
                residual: res,
                iterations: it,
            });
        }
    }
    if res <= tol {
        return Ok(Prox {
            point: z,
            residual: res,
            iterations: MAX_NEWTON,
        });
    }
    Err(ConvexError::NonConvergence {
        residual: res,
        iterations: MAX_NEWTON,
    })
}
