//! Sampled checks of the resolvent and Yosida identities for a functional.

use super::{yosida, ConvexError, Functional};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Violations found on one pair of points; each field is the amount by which
/// the property fails, `0` when it holds exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairAudit {
    /// `‖J w₁ - J w₂‖ - ‖w₁ - w₂‖`.
    pub nonexpansive: f64,
    /// `‖A w₁ - A w₂‖ - ‖w₁ - w₂‖/λ`.
    pub yosida_lipschitz: f64,
    /// `-⟨A w₁ - A w₂, w₁ - w₂⟩`.
    pub monotone: f64,
    /// Worst of `φ(J w) - φ_λ(w)` and `φ_λ(w) - φ(w)` over both points.
    pub sandwich: f64,
    /// `‖w - J w - λ A w‖` over both points.
    pub identity: f64,
}

impl PairAudit {
    pub fn worst(&self) -> f64 {
        [
            self.nonexpansive,
            self.yosida_lipschitz,
            self.monotone,
            self.sandwich,
            self.identity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(&mut self, o: &PairAudit) {
        self.nonexpansive = self.nonexpansive.max(o.nonexpansive);
        self.yosida_lipschitz = self.yosida_lipschitz.max(o.yosida_lipschitz);
        self.monotone = self.monotone.max(o.monotone);
        self.sandwich = self.sandwich.max(o.sandwich);
        self.identity = self.identity.max(o.identity);
    }
}

/// Checks one pair at parameter `lambda`, solving resolvents to `tol`.
pub fn audit_pair(
    phi: &dyn Functional,
    lambda: f64,
    w1: &[f64],
    w2: &[f64],
    tol: f64,
) -> Result<PairAudit, ConvexError> {
    let space = phi.space();
    let e1 = yosida(phi, lambda, w1, tol)?;
    let e2 = yosida(phi, lambda, w2, tol)?;
    let dw: Vec<f64> = w1.iter().zip(w2).map(|(a, b)| a - b).collect();
    let da: Vec<f64> = e1.yosida.iter().zip(&e2.yosida).map(|(a, b)| a - b).collect();
    let gap = space.norm(&dw);

    let mut sandwich: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for (w, e) in [(w1, &e1), (w2, &e2)] {
        sandwich = sandwich
            .max(phi.value(&e.resolvent) - e.envelope)
            .max(e.envelope - phi.value(w));
        let r: Vec<f64> = w
            .iter()
            .zip(&e.resolvent)
            .zip(&e.yosida)
            .map(|((wi, ji), ai)| wi - ji - lambda * ai)
            .collect();
        identity = identity.max(space.norm(&r));
    }
    Ok(PairAudit {
        nonexpansive: (space.dist(&e1.resolvent, &e2.resolvent) - gap).max(0.0),
        yosida_lipschitz: (space.norm(&da) - gap / lambda).max(0.0),
        monotone: (-space.inner(&da, &dw)).max(0.0),
        sandwich: sandwich.max(0.0),
        identity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub functional: String,
    pub pairs: usize,
    pub lambdas: Vec<f64>,
    pub worst: PairAudit,
}

impl AuditSummary {
    pub fn passed(&self, tol: f64) -> bool {
        self.worst.worst() <= tol
    }
}

/// Runs [`audit_pair`] on `pairs` random pairs with entries uniform in
/// `[-scale, scale]`, at every parameter in `lambdas`.
pub fn audit_random(
    phi: &dyn Functional,
    lambdas: &[f64],
    pairs: usize,
    scale: f64,
    seed: u64,
) -> Result<AuditSummary, ConvexError> {
    let dim = phi.space().dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect() };
    let mut worst = PairAudit::default();
    for _ in 0..pairs {
        let (w1, w2) = (point(&mut rng), point(&mut rng));
        for &lambda in lambdas {
            worst.merge(&audit_pair(phi, lambda, &w1, &w2, 1e-12)?);
        }
    }
    Ok(AuditSummary {
        functional: phi.name(),
        pairs,
        lambdas: lambdas.to_vec(),
        worst,
    })
}

/// Relative mismatch between the subgradient at `w` and central differences
/// of `φ` with step `step`, in the sup norm of the coordinate derivatives.
pub fn gradient_mismatch(phi: &dyn Functional, w: &[f64], step: f64) -> f64 {
    let space = phi.space();
    let mut g = vec![0.0; w.len()];
    phi.subgradient(w, &mut g);
    let mut x = w.to_vec();
    let (mut err, mut size): (f64, f64) = (0.0, 0.0);
    for i in 0..w.len() {
        x[i] = w[i] + step;
        let up = phi.value(&x);
        x[i] = w[i] - step;
        let down = phi.value(&x);
        x[i] = w[i];
        let fd = (up - down) / (2.0 * step);
        err = err.max((space.weight * g[i] - fd).abs());
        size = size.max(fd.abs());
    }
    if size == 0.0 {
        err
    } else {
        err / size
    }
}
