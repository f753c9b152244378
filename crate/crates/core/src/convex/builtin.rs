use super::{ConvexError, Functional, Prox, Smooth, Space};

/// `φ(w) = (c/2)‖w‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    space: Space,
    scale: f64,
}

impl Quadratic {
    pub fn new(space: Space) -> Self {
        Self { space, scale: 1.0 }
    }

    pub fn scaled(space: Space, scale: f64) -> Result<Self, ConvexError> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(ConvexError::InvalidParameter(format!(
                "quadratic scale must be nonnegative, got {scale}"
            )));
        }
        Ok(Self { space, scale })
    }

    /// `φ ≡ 0`.
    pub fn zero(space: Space) -> Self {
        Self { space, scale: 0.0 }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Functional for Quadratic {
    fn space(&self) -> Space {
        self.space
    }

    fn value(&self, w: &[f64]) -> f64 {
        0.5 * self.scale * self.space.norm_sq(w)
    }

    fn subgradient(&self, w: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(w) {
            *o = self.scale * x;
        }
    }

    fn resolvent(&self, lambda: f64, w: &[f64], _tol: f64) -> Result<Prox, ConvexError> {
        let factor = 1.0 / (1.0 + lambda * self.scale);
        Ok(Prox {
            point: w.iter().map(|x| x * factor).collect(),
            residual: 0.0,
            iterations: 0,
        })
    }

    fn name(&self) -> String {
        if self.scale == 0.0 {
            "zero".into()
        } else {
            format!("quadratic(c={})", self.scale)
        }
    }
}

impl Smooth for Quadratic {
    fn hessian_vec(&self, _z: &[f64], v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.scale * x;
        }
    }

    fn hessian_diag(&self, _z: &[f64], out: &mut [f64]) {
        out.fill(self.scale);
    }
}

/// `φ(w) = (1/q) Σ |wᵢ|^q` in the weighted inner product, `q > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPotential {
    space: Space,
    exponent: f64,
}

impl PowerPotential {
    pub fn new(space: Space, exponent: f64) -> Result<Self, ConvexError> {
        if !(exponent.is_finite() && exponent > 1.0) {
            return Err(ConvexError::InvalidParameter(format!(
                "power exponent must exceed 1, got {exponent}"
            )));
        }
        Ok(Self { space, exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    fn slope(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x.abs().powf(self.exponent - 2.0) * x
        }
    }
}

/// Root of `s + λ s^{q-1} = a` on `[0, a]`.
pub(crate) fn scalar_power_prox(a: f64, lambda: f64, q: f64) -> (f64, usize) {
    if a == 0.0 {
        return (0.0, 0);
    }
    let f = |s: f64| s + lambda * s.powf(q - 1.0) - a;
    let (mut lo, mut hi) = (0.0, a);
    let mut s = if q >= 2.0 {
        a
    } else {
        // for q < 2 the root sits near a when λ a^{q-2} is small and near
        // (a/λ)^{1/(q-1)} otherwise
        a.min((a / lambda).powf(1.0 / (q - 1.0)))
    };
    for it in 1..=200 {
        let fs = f(s);
        if fs == 0.0 {
            return (s, it);
        }
        if fs > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let df = 1.0 + lambda * (q - 1.0) * s.powf(q - 2.0);
        let mut next = s - fs / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * s.max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi {
            return (next, it);
        }
        s = next;
    }
    (s, 200)
}

impl Functional for PowerPotential {
    fn space(&self) -> Space {
        self.space
    }

    fn value(&self, w: &[f64]) -> f64 {
        let q = self.exponent;
        self.space.weight * w.iter().map(|x| x.abs().powf(q)).sum::<f64>() / q
    }

    fn subgradient(&self, w: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(w) {
            *o = self.slope(*x);
        }
    }

    fn resolvent(&self, lambda: f64, w: &[f64], _tol: f64) -> Result<Prox, ConvexError> {
        let mut iterations = 0;
        let point: Vec<f64> = w
            .iter()
            .map(|x| {
                let (s, it) = scalar_power_prox(x.abs(), lambda, self.exponent);
                iterations = iterations.max(it);
                s.copysign(*x)
            })
            .collect();
        let residual = super::optimality_residual(self, lambda, w, &point);
        Ok(Prox {
            point,
            residual,
            iterations,
        })
    }

    fn name(&self) -> String {
        format!("power(q={})", self.exponent)
    }
}
