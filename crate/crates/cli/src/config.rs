//! Run configuration as read from JSON. Unknown keys are rejected at every
//! level, and [`RunConfig::validate`] checks the cross-field rules.

use fraflow::flow::SolverConfig;
use fraflow::plaplace::PdeConfig;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Sweep,
    Certify,
    Kernels,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Sweep => "sweep",
            Mode::Certify => "certify",
            Mode::Kernels => "kernels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub problem: Option<ProblemBlock>,
    #[serde(default)]
    pub kernel: Option<KernelBlock>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Seed for randomized suites; `--seed` takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub certify: Option<CertifyBlock>,
    #[serde(default)]
    pub kernels: Option<KernelsBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Zero,
    /// `(c/2)‖w‖²`.
    Quadratic {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(1/q) Σ |wᵢ|^q`.
    Power {
        exponent: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn zero_functional() -> FunctionalSpec {
    FunctionalSpec::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemBlock {
    /// A flow on `ℝ^n` with built-in functionals and constant forcing.
    #[serde(rename_all = "snake_case")]
    Abstract {
        energy: FunctionalSpec,
        #[serde(default = "zero_functional")]
        reaction: FunctionalSpec,
        initial: Vec<f64>,
        #[serde(default)]
        forcing: Option<Vec<f64>>,
        horizon: f64,
        steps: usize,
    },
    /// The p-Laplace experiment; carries its own order `alpha`.
    PLaplace(PdeConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelBlock {
    RiemannLiouville {
        alpha: f64,
    },
    /// A `t,k,l` CSV, relative paths resolved against the config file.
    Table {
        path: PathBuf,
    },
}

/// Cartesian product over the listed axes, in the order
/// `p, q, alpha, m, amplitude`. Missing axes take the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub base: PdeConfig,
    #[serde(default)]
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub m: Vec<usize>,
    #[serde(default)]
    pub amplitude: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CertifyBlock {
    /// Binary trajectory dump to check.
    #[serde(default)]
    pub dump: Option<PathBuf>,
    /// Functionals whose chain rule is checked along the dump.
    #[serde(default = "default_functionals")]
    pub functionals: Vec<FunctionalSpec>,
    /// Slack coefficient for the dump checks; calibrated from the kernel
    /// order when absent.
    #[serde(default)]
    pub slack_coeff: Option<f64>,
    #[serde(default)]
    pub suite: Option<SuiteBlock>,
}

fn default_functionals() -> Vec<FunctionalSpec> {
    vec![FunctionalSpec::Quadratic { scale: 1.0 }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SuiteBlock {
    pub per_lemma: usize,
    #[serde(default = "yes")]
    pub handcrafted: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct KernelsBlock {
    pub horizon: f64,
    /// Coarse step counts; each is checked against its refinement.
    pub steps: Vec<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Indices `n` of the regularized kernels `k_n` to tabulate.
    #[serde(default)]
    pub regularize: Vec<u32>,
}

fn default_tolerance() -> f64 {
    1e-2
}

impl RunConfig {
    /// JSON schema of the config file, as published in `schema/`.
    pub fn schema() -> String {
        let schema = schemars::schema_for!(RunConfig);
        let mut text = serde_json::to_string_pretty(&schema).expect("schemas serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        self.solver
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        match self.mode {
            Mode::Solve => match &self.problem {
                None => return bad("solve needs a problem block"),
                Some(ProblemBlock::Abstract { .. }) if self.kernel.is_none() => {
                    return bad("an abstract problem needs a kernel block")
                }
                Some(ProblemBlock::PLaplace(_)) if self.kernel.is_some() => {
                    return bad("a p-laplace problem sets its order through alpha, not a kernel block")
                }
                Some(_) => {}
            },
            Mode::Sweep => {
                let Some(sweep) = &self.sweep else {
                    return bad("sweep needs a sweep block");
                };
                if sweep
                    .amplitude
                    .iter()
                    .chain(&sweep.p)
                    .chain(&sweep.q)
                    .chain(&sweep.alpha)
                    .any(|v| !v.is_finite())
                {
                    return bad("sweep axes must be finite");
                }
            }
            Mode::Certify => {
                let Some(c) = &self.certify else {
                    return bad("certify needs a certify block");
                };
                if c.dump.is_none() && c.suite.is_none() {
                    return bad("certify needs a dump, a suite, or both");
                }
                if c.slack_coeff.is_some_and(|s| !(s >= 0.0 && s.is_finite())) {
                    return bad("slack_coeff must be finite and nonnegative");
                }
            }
            Mode::Kernels => {
                if self.kernel.is_none() {
                    return bad("kernels needs a kernel block");
                }
                let Some(k) = &self.kernels else {
                    return bad("kernels needs a kernels block");
                };
                if k.steps.is_empty() || k.steps.contains(&0) {
                    return bad("kernels.steps must list positive step counts");
                }
                if !(k.horizon.is_finite() && k.horizon > 0.0) {
                    return bad("kernels.horizon must be positive");
                }
                if k.regularize.contains(&0) {
                    return bad("regularization indices start at 1");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"{"mode":"certify","certify":{"suite":{"per_lemma":1}},"extra":1}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Parse(_))));
        let text = r#"{"mode":"certify","certify":{"suite":{"per_lemma":1,"x":0}}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Parse(_))));
        let text = r#"{"mode":"solve","problem":{"kind":"abstract","energy":{"kind":"quadratic"},
            "initial":[1.0],"horizon":1.0,"steps":8,"x":0},"kernel":{"kind":"riemann-liouville","alpha":0.5}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn abstract_problem_needs_kernel() {
        let text = r#"{"mode":"solve","problem":{"kind":"abstract","energy":{"kind":"quadratic"},
            "initial":[1.0],"horizon":1.0,"steps":8}}"#;
        assert!(matches!(RunConfig::from_json(text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn p_laplace_block_parses() {
        let text = r#"{"mode":"solve","problem":{"kind":"p-laplace","p":2,"q":4,"alpha":0.5,"m":8,
            "initial":{"kind":"sine-bump","amplitude":1},"horizon":1,"steps":16}}"#;
        let config = RunConfig::from_json(text).unwrap();
        assert!(matches!(config.problem, Some(ProblemBlock::PLaplace(_))));
    }
}
