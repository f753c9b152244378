//! Finite-difference p-Dirichlet energies on the unit interval and square
//! with homogeneous Dirichlet boundary values.

use crate::convex::{newton_prox, ConvexError, Functional, PowerPotential, Prox, Smooth, Space};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradient regularization used for `p < 2`.
pub const FLUX_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("grid needs at least one interior point per axis")]
    Empty,
    #[error("exponent must exceed 1, got {0}")]
    Exponent(f64),
}

/// `m` interior points per axis, spacing `h = 1/(m+1)`, zero ghost values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridShape", into = "GridShape")]
pub struct Grid {
    dim: usize,
    m: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridShape {
    dim: usize,
    m: usize,
}

impl TryFrom<GridShape> for Grid {
    type Error = GridError;

    fn try_from(s: GridShape) -> Result<Self, GridError> {
        Grid::new(s.dim, s.m)
    }
}

impl From<Grid> for GridShape {
    fn from(g: Grid) -> Self {
        GridShape { dim: g.dim, m: g.m }
    }
}

impl Grid {
    pub fn new(dim: usize, m: usize) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::Dimension(dim));
        }
        if m == 0 {
            return Err(GridError::Empty);
        }
        Ok(Self { dim, m })
    }

    pub fn line(m: usize) -> Result<Self, GridError> {
        Self::new(1, m)
    }

    pub fn square(m: usize) -> Result<Self, GridError> {
        Self::new(2, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.m + 1) as f64
    }

    /// Number of unknowns, `m^d`.
    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn space(&self) -> Space {
        Space::weighted(self.len(), self.cell_volume())
    }

    /// Coordinates of unknown `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [(k + 1) as f64 * h, 0.0],
            _ => [((k % self.m) + 1) as f64 * h, ((k / self.m) + 1) as f64 * h],
        }
    }

    /// Samples `f` at the interior points.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }

    /// `A · Π sin(π xᵢ)`, the first Dirichlet eigenfunction.
    pub fn sine_bump(&self, amplitude: f64) -> Vec<f64> {
        let pi = std::f64::consts::PI;
        let dim = self.dim;
        self.sample(|x| {
            let mut v = amplitude * (pi * x[0]).sin();
            if dim == 2 {
                v *= (pi * x[1]).sin();
            }
            v
        })
    }

    fn padded_len(&self) -> usize {
        self.m + 2
    }

    fn pad(&self, u: &[f64]) -> Vec<f64> {
        let n = self.padded_len();
        match self.dim {
            1 => {
                let mut out = vec![0.0; n];
                out[1..=self.m].copy_from_slice(u);
                out
            }
            _ => {
                let mut out = vec![0.0; n * n];
                for j in 0..self.m {
                    let row = &u[j * self.m..(j + 1) * self.m];
                    out[(j + 1) * n + 1..(j + 1) * n + 1 + self.m].copy_from_slice(row);
                }
                out
            }
        }
    }

    /// Interior index of padded position, if interior.
    fn interior(&self, i: usize, j: usize) -> Option<usize> {
        let inside = |a: usize| a >= 1 && a <= self.m;
        match self.dim {
            1 => inside(i).then(|| i - 1),
            _ => (inside(i) && inside(j)).then(|| (j - 1) * self.m + (i - 1)),
        }
    }

    /// Forward-difference gradient on every cell `[x_i, x_{i+1}]` (1D) or
    /// `[x_i, x_{i+1}] × [y_j, y_{j+1}]` (2D), ghosts included.
    fn gradients(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let n = self.padded_len();
        let h = self.spacing();
        let pu = self.pad(u);
        match self.dim {
            1 => (0..n - 1).map(|i| [(pu[i + 1] - pu[i]) / h, 0.0]).collect(),
            _ => {
                let mut out = Vec::with_capacity((n - 1) * (n - 1));
                for j in 0..n - 1 {
                    for i in 0..n - 1 {
                        let c = pu[j * n + i];
                        out.push([(pu[j * n + i + 1] - c) / h, (pu[(j + 1) * n + i] - c) / h]);
                    }
                }
                out
            }
        }
    }

    /// Interior endpoints of each flux component of cell `c`.
    fn flux_coupling(&self, c: usize) -> [usize; 2] {
        let count = |a: Option<usize>, b: Option<usize>| a.is_some() as usize + b.is_some() as usize;
        match self.dim {
            1 => [count(self.interior(c, 0), self.interior(c + 1, 0)), 0],
            _ => {
                let n = self.padded_len() - 1;
                let (i, j) = (c % n, c / n);
                [
                    count(self.interior(i, j), self.interior(i + 1, j)),
                    count(self.interior(i, j), self.interior(i, j + 1)),
                ]
            }
        }
    }

    /// Adjoint of [`Grid::gradients`] in the weighted inner products:
    /// `out_k = Σ_c F_c · ∂g_c/∂u_k`.
    fn divergence_adjoint(&self, fluxes: &[[f64; 2]], out: &mut [f64]) {
        out.fill(0.0);
        let n = self.padded_len();
        let inv_h = 1.0 / self.spacing();
        match self.dim {
            1 => {
                for (i, f) in fluxes.iter().enumerate() {
                    if let Some(k) = self.interior(i + 1, 0) {
                        out[k] += f[0] * inv_h;
                    }
                    if let Some(k) = self.interior(i, 0) {
                        out[k] -= f[0] * inv_h;
                    }
                }
            }
            _ => {
                for j in 0..n - 1 {
                    for i in 0..n - 1 {
                        let f = fluxes[j * (n - 1) + i];
                        if let Some(k) = self.interior(i, j) {
                            out[k] -= (f[0] + f[1]) * inv_h;
                        }
                        if let Some(k) = self.interior(i + 1, j) {
                            out[k] += f[0] * inv_h;
                        }
                        if let Some(k) = self.interior(i, j + 1) {
                            out[k] += f[1] * inv_h;
                        }
                    }
                }
            }
        }
    }
}

/// `φ(w) = (1/p) Σ_cells h^d |∇_h w|^p`.
///
/// For `p < 2` the integrand is `((|g|² + ε²)^{p/2} - ε^p)/p` so that the
/// flux stays finite at zero gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PDirichlet {
    grid: Grid,
    p: f64,
    eps: f64,
}

impl PDirichlet {
    pub fn new(grid: Grid, p: f64) -> Result<Self, GridError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(GridError::Exponent(p));
        }
        let eps = if p < 2.0 { FLUX_EPSILON } else { 0.0 };
        Ok(Self { grid, p, eps })
    }

    /// Same energy with a custom regularization (used for sensitivity runs).
    pub fn with_epsilon(grid: Grid, p: f64, eps: f64) -> Result<Self, GridError> {
        let mut out = Self::new(grid, p)?;
        out.eps = eps;
        Ok(out)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    fn flux_scale(&self, g: [f64; 2]) -> f64 {
        let r2 = g[0] * g[0] + g[1] * g[1] + self.eps * self.eps;
        if r2 == 0.0 {
            return if self.p > 2.0 { 0.0 } else { 1.0 };
        }
        r2.powf(0.5 * (self.p - 2.0))
    }

    /// Coefficient of `g gᵀ` in the Hessian of the integrand.
    fn rank_one_scale(&self, g: [f64; 2]) -> f64 {
        let r2 = g[0] * g[0] + g[1] * g[1] + self.eps * self.eps;
        if r2 == 0.0 || self.p == 2.0 {
            return 0.0;
        }
        (self.p - 2.0) * r2.powf(0.5 * (self.p - 4.0))
    }

    fn fluxes(&self, w: &[f64]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let grads = self.grid.gradients(w);
        let fluxes = grads
            .iter()
            .map(|g| {
                let s = self.flux_scale(*g);
                [s * g[0], s * g[1]]
            })
            .collect();
        (grads, fluxes)
    }
}

impl PDirichlet {
    /// Resolvent through the flux problem
    ///
    /// ```text
    /// min_F (λ/2)|D F|² - ⟨w, D F⟩ + Σ_c |F_c|^{p'}/p',   z = w - λ D F,
    /// ```
    ///
    /// with `D` the adjoint of the cell gradient and `p' = p/(p-1)`. For
    /// `p < 2` the primal flux `|g|^{p-2} g` is only Hölder at `g = 0` and
    /// rounding in `g` caps the attainable primal residual; the conjugate
    /// integrand is `C²` instead. The regularization `ε` plays no role here.
    /// Used for every `p < 2`. The reported residual is `‖∇_h z - |F|^{p'-2} F‖` over cells, and
    /// `(w - z)/λ = D F` is an exact subgradient of the unregularized energy.
    fn dual_resolvent(&self, lambda: f64, w: &[f64], tol: f64) -> Result<Prox, ConvexError> {
        const MAX_ITER: usize = 400;
        let grid = self.grid;
        let vol = grid.cell_volume();
        let q = self.p / (self.p - 1.0);
        let nodes = w.len();
        let cells = grid.gradients(w).len();

        let div = |f: &[[f64; 2]]| {
            let mut out = vec![0.0; nodes];
            grid.divergence_adjoint(f, &mut out);
            out
        };
        let state = |f: &[[f64; 2]]| -> Vec<f64> { div(f).iter().zip(w).map(|(d, wi)| wi - lambda * d).collect() };
        let dual_flux = |f: [f64; 2]| {
            let r = f[0].hypot(f[1]);
            let s = if r > 0.0 { r.powf(q - 2.0) } else { 0.0 };
            [s * f[0], s * f[1]]
        };
        let objective = |f: &[[f64; 2]]| {
            let d = div(f);
            let quad: f64 = d.iter().zip(w).map(|(di, wi)| 0.5 * lambda * di * di - wi * di).sum();
            let pot: f64 = f.iter().map(|c| c[0].hypot(c[1]).powf(q) / q).sum();
            quad + pot
        };
        let gradient = |f: &[[f64; 2]]| -> (Vec<[f64; 2]>, f64) {
            let g = grid.gradients(&state(f));
            let r: Vec<[f64; 2]> = f
                .iter()
                .zip(&g)
                .map(|(fc, gc)| {
                    let d = dual_flux(*fc);
                    [d[0] - gc[0], d[1] - gc[1]]
                })
                .collect();
            let norm = (vol * r.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum::<f64>()).sqrt();
            (r, norm)
        };
        let h2 = grid.spacing() * grid.spacing();
        let coupling_diag: Vec<[f64; 2]> = (0..cells)
            .map(|c| grid.flux_coupling(c).map(|k| lambda * k as f64 / h2))
            .collect();
        let regularization = 1e-14 * lambda / h2;

        // start from the fluxes of w itself
        let mut f: Vec<[f64; 2]> = grid
            .gradients(w)
            .iter()
            .map(|g| {
                let r = g[0].hypot(g[1]);
                let s = if r > 0.0 { r.powf(self.p - 2.0) } else { 0.0 };
                [s * g[0], s * g[1]]
            })
            .collect();
        let mut value = objective(&f);
        let (mut grad, mut res) = gradient(&f);
        for it in 0..MAX_ITER {
            if res <= tol {
                return Ok(Prox {
                    point: state(&f),
                    residual: res,
                    iterations: it,
                });
            }
            let blocks: Vec<[[f64; 2]; 2]> = f
                .iter()
                .map(|fc| {
                    let r = fc[0].hypot(fc[1]);
                    if r == 0.0 {
                        return if q == 2.0 {
                            [[1.0, 0.0], [0.0, 1.0]]
                        } else {
                            [[0.0; 2]; 2]
                        };
                    }
                    let s = r.powf(q - 2.0);
                    let c = (q - 2.0) * s / (r * r);
                    [
                        [s + c * fc[0] * fc[0], c * fc[0] * fc[1]],
                        [c * fc[0] * fc[1], s + c * fc[1] * fc[1]],
                    ]
                })
                .collect();
            let hess = |v: &[[f64; 2]]| -> Vec<[f64; 2]> {
                let gd = grid.gradients(&div(v));
                v.iter()
                    .zip(&gd)
                    .zip(&blocks)
                    .map(|((vc, gc), b)| {
                        [
                            lambda * gc[0] + b[0][0] * vc[0] + b[0][1] * vc[1] + regularization * vc[0],
                            lambda * gc[1] + b[1][0] * vc[0] + b[1][1] * vc[1] + regularization * vc[1],
                        ]
                    })
                    .collect()
            };
            let precond: Vec<[f64; 2]> = blocks
                .iter()
                .zip(&coupling_diag)
                .map(|(b, k)| {
                    [
                        1.0 / (b[0][0] + k[0] + regularization),
                        1.0 / (b[1][1] + k[1] + regularization),
                    ]
                })
                .collect();
            let rhs: Vec<[f64; 2]> = grad.iter().map(|c| [-c[0], -c[1]]).collect();
            let forcing = (res / (1.0 + res)).sqrt().min(0.1);
            let dir = block_pcg(&hess, &precond, &rhs, forcing);
            let dot =
                |a: &[[f64; 2]], b: &[[f64; 2]]| a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum::<f64>();
            let mut dir = dir;
            let mut slope = dot(&grad, &dir);
            if !(slope < 0.0) {
                dir = rhs.clone();
                slope = -dot(&grad, &grad);
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<[f64; 2]> = f
                    .iter()
                    .zip(&dir)
                    .map(|(a, d)| [a[0] + step * d[0], a[1] + step * d[1]])
                    .collect();
                let tv = objective(&trial);
                if tv.is_finite() {
                    let (tg, tr) = gradient(&trial);
                    let armijo = tv <= value + 1e-4 * step * slope;
                    let flat = tv <= value + 4.0 * f64::EPSILON * value.abs().max(1.0) && tr < res;
                    if armijo || flat {
                        f = trial;
                        value = tv;
                        grad = tg;
                        res = tr;
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
                point: state(&f),
                residual: res,
                iterations: MAX_ITER,
            });
        }
        Err(ConvexError::NonConvergence {
            residual: res,
            iterations: MAX_ITER,
        })
    }
}

/// Preconditioned conjugate gradients on cell fluxes.
fn block_pcg(
    hess: &dyn Fn(&[[f64; 2]]) -> Vec<[f64; 2]>,
    precond: &[[f64; 2]],
    rhs: &[[f64; 2]],
    forcing: f64,
) -> Vec<[f64; 2]> {
    let dot = |a: &[[f64; 2]], b: &[[f64; 2]]| a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum::<f64>();
    let apply =
        |r: &[[f64; 2]]| -> Vec<[f64; 2]> { r.iter().zip(precond).map(|(a, m)| [a[0] * m[0], a[1] * m[1]]).collect() };
    let n = rhs.len();
    let mut x = vec![[0.0; 2]; n];
    let mut r = rhs.to_vec();
    let mut y = apply(&r);
    let mut p = y.clone();
    let mut ry = dot(&r, &y);
    let target = forcing * dot(rhs, rhs).sqrt();
    for _ in 0..(4 * n + 20) {
        if dot(&r, &r).sqrt() <= target {
            break;
        }
        let hp = hess(&p);
        let php = dot(&p, &hp);
        if !(php > 0.0) {
            break;
        }
        let a = ry / php;
        for i in 0..n {
            for k in 0..2 {
                x[i][k] += a * p[i][k];
                r[i][k] -= a * hp[i][k];
            }
        }
        y = apply(&r);
        let ry_next = dot(&r, &y);
        let beta = ry_next / ry;
        ry = ry_next;
        for i in 0..n {
            for k in 0..2 {
                p[i][k] = y[i][k] + beta * p[i][k];
            }
        }
    }
    if x.iter().all(|c| c[0] == 0.0 && c[1] == 0.0) {
        return apply(rhs);
    }
    x
}

/// `Δ_p u = div(|∇u|^{p-2} ∇u)` in divergence form with zero ghosts.
pub fn discrete_p_laplacian(grid: &Grid, u: &[f64], p: f64) -> Result<Vec<f64>, GridError> {
    let energy = PDirichlet::new(*grid, p)?;
    let mut out = vec![0.0; grid.len()];
    energy.subgradient(u, &mut out);
    out.iter_mut().for_each(|v| *v = -*v);
    Ok(out)
}

pub fn dirichlet_p_energy(grid: &Grid, p: f64) -> Result<PDirichlet, GridError> {
    PDirichlet::new(*grid, p)
}

/// `(1/q) Σ h^d |wᵢ|^q`.
pub fn q_potential(grid: &Grid, q: f64) -> Result<PowerPotential, GridError> {
    PowerPotential::new(grid.space(), q).map_err(|_| GridError::Exponent(q))
}

impl Functional for PDirichlet {
    fn space(&self) -> Space {
        self.grid.space()
    }

    fn value(&self, w: &[f64]) -> f64 {
        let vol = self.grid.cell_volume();
        let eps_p = if self.eps > 0.0 { self.eps.powf(self.p) } else { 0.0 };
        let sum: f64 = self
            .grid
            .gradients(w)
            .iter()
            .map(|g| {
                let r2 = g[0] * g[0] + g[1] * g[1] + self.eps * self.eps;
                r2.powf(0.5 * self.p) - eps_p
            })
            .sum();
        vol * sum / self.p
    }

    fn subgradient(&self, w: &[f64], out: &mut [f64]) {
        let (_, fluxes) = self.fluxes(w);
        self.grid.divergence_adjoint(&fluxes, out);
    }

    fn resolvent(&self, lambda: f64, w: &[f64], tol: f64) -> Result<Prox, ConvexError> {
        if self.p < 2.0 {
            self.dual_resolvent(lambda, w, tol)
        } else {
            newton_prox(self, lambda, w, tol)
        }
    }

    fn name(&self) -> String {
        format!("p-dirichlet(p={}, d={}, m={})", self.p, self.grid.dim, self.grid.m)
    }
}

impl Smooth for PDirichlet {
    fn hessian_vec(&self, z: &[f64], v: &[f64], out: &mut [f64]) {
        let grads = self.grid.gradients(z);
        let dgs = self.grid.gradients(v);
        let fluxes: Vec<[f64; 2]> = grads
            .iter()
            .zip(&dgs)
            .map(|(g, dg)| {
                let s = self.flux_scale(*g);
                let c = self.rank_one_scale(*g) * (g[0] * dg[0] + g[1] * dg[1]);
                [s * dg[0] + c * g[0], s * dg[1] + c * g[1]]
            })
            .collect();
        self.grid.divergence_adjoint(&fluxes, out);
    }

    fn hessian_diag(&self, z: &[f64], out: &mut [f64]) {
        let grid = self.grid;
        let grads = grid.gradients(z);
        let n = grid.padded_len();
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        out.fill(0.0);
        // each cell contributes dgᵀ (s I + c g gᵀ) dg with dg = ±e/h
        let mut add = |k: Option<usize>, g: [f64; 2], d: [f64; 2]| {
            if let Some(k) = k {
                let s = self.flux_scale(g);
                let c = self.rank_one_scale(g);
                let gd = g[0] * d[0] + g[1] * d[1];
                out[k] += (s * (d[0] * d[0] + d[1] * d[1]) + c * gd * gd) * inv_h2;
            }
        };
        match grid.dim {
            1 => {
                for (i, g) in grads.iter().enumerate() {
                    add(grid.interior(i + 1, 0), *g, [1.0, 0.0]);
                    add(grid.interior(i, 0), *g, [-1.0, 0.0]);
                }
            }
            _ => {
                for j in 0..n - 1 {
                    for i in 0..n - 1 {
                        let g = grads[j * (n - 1) + i];
                        add(grid.interior(i, j), g, [-1.0, -1.0]);
                        add(grid.interior(i + 1, j), g, [1.0, 0.0]);
                        add(grid.interior(i, j + 1), g, [0.0, 1.0]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn single_point_energy() {
        // h = 1/2, faces carry gradients ±2: (1/2)·h·(4 + 4) = 2
        let grid = Grid::line(1).unwrap();
        let phi = PDirichlet::new(grid, 2.0).unwrap();
        assert_relative_eq!(phi.value(&[1.0]), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_state() {
        for grid in [Grid::line(5).unwrap(), Grid::square(4).unwrap()] {
            let u = vec![0.0; grid.len()];
            for p in [1.5, 2.0, 3.0] {
                assert_eq!(PDirichlet::new(grid, p).unwrap().value(&u), 0.0);
                assert!(discrete_p_laplacian(&grid, &u, p).unwrap().iter().all(|v| *v == 0.0));
            }
            assert_eq!(q_potential(&grid, 3.0).unwrap().value(&u), 0.0);
        }
    }

    #[test]
    fn laplacian_is_tridiagonal_second_difference() {
        let grid = Grid::line(7).unwrap();
        let u = random_state(7, 3);
        let lap = discrete_p_laplacian(&grid, &u, 2.0).unwrap();
        let h2 = grid.spacing().powi(2);
        for k in 0..7 {
            let left = if k > 0 { u[k - 1] } else { 0.0 };
            let right = if k < 6 { u[k + 1] } else { 0.0 };
            assert_relative_eq!(lap[k], (left - 2.0 * u[k] + right) / h2, max_relative = 1e-12);
        }
    }

    #[test]
    fn sine_is_eigenfunction() {
        for m in [16, 32, 64] {
            let grid = Grid::line(m).unwrap();
            let u = grid.sine_bump(1.0);
            let lap = discrete_p_laplacian(&grid, &u, 2.0).unwrap();
            let pi2 = std::f64::consts::PI.powi(2);
            let h = grid.spacing();
            for (l, v) in lap.iter().zip(&u) {
                assert!((-l - pi2 * v).abs() <= pi2 * pi2 * h * h / 12.0 * 1.01 + 1e-12);
            }
        }
    }

    #[test]
    fn square_laplacian_is_five_point() {
        let grid = Grid::square(4).unwrap();
        let u = random_state(16, 5);
        let lap = discrete_p_laplacian(&grid, &u, 2.0).unwrap();
        let at = |i: i64, j: i64| {
            if (0..4).contains(&i) && (0..4).contains(&j) {
                u[(j * 4 + i) as usize]
            } else {
                0.0
            }
        };
        let h2 = grid.spacing().powi(2);
        for j in 0..4 {
            for i in 0..4 {
                let expect = (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1) - 4.0 * at(i, j)) / h2;
                assert_relative_eq!(lap[(j * 4 + i) as usize], expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        for (grid, p) in [
            (Grid::line(8).unwrap(), 3.0),
            (Grid::line(8).unwrap(), 1.5),
            (Grid::square(4).unwrap(), 4.0),
        ] {
            let phi = PDirichlet::new(grid, p).unwrap();
            let z = random_state(grid.len(), 11);
            let v = random_state(grid.len(), 12);
            let mut hv = vec![0.0; grid.len()];
            phi.hessian_vec(&z, &v, &mut hv);
            let step = 1e-6;
            let plus: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + step * b).collect();
            let minus: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a - step * b).collect();
            let (mut gp, mut gm) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
            phi.subgradient(&plus, &mut gp);
            phi.subgradient(&minus, &mut gm);
            let scale = hv.iter().map(|x| x.abs()).fold(0.0, f64::max);
            for k in 0..grid.len() {
                let fd = (gp[k] - gm[k]) / (2.0 * step);
                assert!((fd - hv[k]).abs() <= 1e-5 * scale, "p={p} k={k}");
            }
            let mut diag = vec![0.0; grid.len()];
            phi.hessian_diag(&z, &mut diag);
            for k in 0..grid.len() {
                let mut e = vec![0.0; grid.len()];
                e[k] = 1.0;
                phi.hessian_vec(&z, &e, &mut hv);
                assert_relative_eq!(diag[k], hv[k], max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn p3_resolvent_residual() {
        let grid = Grid::line(8).unwrap();
        let phi = PDirichlet::new(grid, 3.0).unwrap();
        for seed in 0..5 {
            let w = random_state(8, seed);
            let prox = phi.resolvent(1.0, &w, 1e-8).unwrap();
            assert!(prox.residual <= 1e-8);
            let check = crate::convex::optimality_residual(&phi, 1.0, &w, &prox.point);
            assert!(check <= 1e-8);
        }
    }

    #[test]
    fn flux_resolvent_matches_primal() {
        for grid in [Grid::line(9).unwrap(), Grid::square(4).unwrap()] {
            let phi = PDirichlet::new(grid, 3.0).unwrap();
            for seed in 0..4 {
                let w = random_state(grid.len(), seed + 20);
                let dual = phi.dual_resolvent(0.05, &w, 1e-11).unwrap();
                let primal = newton_prox(&phi, 0.05, &w, 1e-10).unwrap();
                let gap = grid.space().dist(&dual.point, &primal.point);
                assert!(gap < 1e-9, "d={} gap {gap}", grid.dim);
            }
        }
        // below p = 2 the primal iteration is unreliable; check optimality of
        // the unregularized problem directly
        for grid in [Grid::line(12).unwrap(), Grid::square(5).unwrap()] {
            let phi = PDirichlet::new(grid, 1.5).unwrap();
            let exact = PDirichlet::with_epsilon(grid, 1.5, 0.0).unwrap();
            for seed in 0..4 {
                let w = random_state(grid.len(), seed + 20);
                let prox = phi.resolvent(0.05, &w, 1e-11).unwrap();
                let check = crate::convex::optimality_residual(&exact, 0.05, &w, &prox.point);
                assert!(check < 1e-6, "d={} residual {check}", grid.dim);
            }
        }
    }

    #[test]
    fn symmetric_bump_resolvent_with_flat_center() {
        // the centre face has zero gradient, where the primal flux is only Hölder
        let grid = Grid::line(32).unwrap();
        let phi = PDirichlet::new(grid, 1.5).unwrap();
        let w = grid.sine_bump(1.0);
        let prox = phi.resolvent(1e-2, &w, 1e-10).unwrap();
        assert!(prox.residual <= 1e-10);
        assert!(phi.value(&prox.point) < phi.value(&w));
    }

    #[test]
    fn q2_potential_is_half_norm() {
        let grid = Grid::square(3).unwrap();
        let w = random_state(9, 4);
        let phi = q_potential(&grid, 2.0).unwrap();
        assert_relative_eq!(phi.value(&w), 0.5 * grid.space().norm_sq(&w), max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(Grid::new(3, 4), Err(GridError::Dimension(3)));
        assert_eq!(Grid::new(1, 0), Err(GridError::Empty));
        assert!(PDirichlet::new(Grid::line(2).unwrap(), 1.0).is_err());
    }
}
