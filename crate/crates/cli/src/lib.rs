//! Batch front end for fraflow: configure, run, certify and sweep.
//!
//! Exit codes: 0 success, 1 error or failed certificate, 2 blow-up,
//! 64 malformed config, 66 unreadable dump.

pub mod certify;
pub mod config;
pub mod kernels;
pub mod presets;
pub mod solve;
pub mod sweep;

use config::{ConfigError, FunctionalSpec, KernelBlock, Mode, RunConfig};
use fraflow::convex::{Functional, PowerPotential, Quadratic, Space};
use fraflow::io::parse_pair_table;
use fraflow::{rl_pair, SoninePair};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;
pub const EXIT_DUMP: i32 = 66;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unreadable dump {path}: {message}")]
    Dump { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Dump { .. } => EXIT_DUMP,
            CliError::Io { .. } | CliError::Run(_) => EXIT_ERROR,
        }
    }

    pub(crate) fn run(e: impl std::fmt::Display) -> Self {
        CliError::Run(e.to_string())
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        CliError::Config(ConfigError::Invalid(message.into()))
    }
}

/// Command-line overrides and resolved paths for one invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub mode: Mode,
    pub config: RunConfig,
    /// Directory that relative paths in the config are resolved against.
    pub base_dir: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl Invocation {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

/// Loads a config from a file or a named preset and checks that its mode
/// matches the subcommand.
pub fn load_config(mode: Mode, config: Option<&Path>, preset: Option<&str>) -> Result<(RunConfig, PathBuf), CliError> {
    let (text, base_dir) = match (config, preset) {
        (Some(_), Some(_)) => return Err(CliError::invalid("pass either --config or --preset, not both")),
        (None, None) => return Err(CliError::invalid("pass --config PATH or --preset NAME")),
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (text, base)
        }
        (None, Some(name)) => presets::load(name)?,
    };
    let config = RunConfig::from_json(&text)?;
    if config.mode != mode {
        return Err(CliError::invalid(format!(
            "config is for `{}` but the subcommand is `{}`",
            config.mode.as_str(),
            mode.as_str()
        )));
    }
    Ok((config, base_dir))
}

/// Runs one subcommand and returns its exit code.
pub fn execute(inv: &Invocation) -> Result<i32, CliError> {
    fs::create_dir_all(&inv.out).map_err(|source| CliError::Io {
        path: inv.out.clone(),
        source,
    })?;
    match inv.mode {
        Mode::Solve => solve::cmd_solve(inv),
        Mode::Sweep => sweep::cmd_sweep(inv),
        Mode::Certify => certify::cmd_certify(inv),
        Mode::Kernels => kernels::cmd_kernels(inv),
    }
}

pub(crate) fn build_functional(spec: &FunctionalSpec, space: Space) -> Result<Arc<dyn Functional>, CliError> {
    Ok(match spec {
        FunctionalSpec::Zero => Arc::new(Quadratic::zero(space)),
        FunctionalSpec::Quadratic { scale } => {
            Arc::new(Quadratic::scaled(space, *scale).map_err(|e| CliError::invalid(e.to_string()))?)
        }
        FunctionalSpec::Power { exponent } => {
            Arc::new(PowerPotential::new(space, *exponent).map_err(|e| CliError::invalid(e.to_string()))?)
        }
    })
}

pub(crate) fn build_pair(block: &KernelBlock, inv: &Invocation) -> Result<SoninePair, CliError> {
    match block {
        KernelBlock::RiemannLiouville { alpha } => rl_pair(*alpha).map_err(|e| CliError::invalid(e.to_string())),
        KernelBlock::Table { path } => {
            let path = inv.resolve(path);
            let text = fs::read_to_string(&path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_pair_table(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
