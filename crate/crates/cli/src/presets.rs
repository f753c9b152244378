//! Shipped presets. `FRAFLOW_PRESET_DIR` overrides the built-in copies: a
//! file `<name>.json` found there is used instead.

use crate::{CliError, ConfigError};
use std::path::PathBuf;

pub const PRESET_DIR_VAR: &str = "FRAFLOW_PRESET_DIR";

pub const PRESETS: [(&str, &str); 6] = [
    (
        "mittag-leffler-scalar",
        include_str!("../presets/mittag-leffler-scalar.json"),
    ),
    ("classical-limit", include_str!("../presets/classical-limit.json")),
    ("sonine-check", include_str!("../presets/sonine-check.json")),
    ("blowup-1d", include_str!("../presets/blowup-1d.json")),
    ("smalldata-1d", include_str!("../presets/smalldata-1d.json")),
    ("regime-diagram", include_str!("../presets/regime-diagram.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn builtin(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Preset text and the directory its relative paths resolve against.
pub fn load(name: &str) -> Result<(String, PathBuf), CliError> {
    if let Some(dir) = std::env::var_os(PRESET_DIR_VAR) {
        let dir = PathBuf::from(dir);
        let path = dir.join(format!("{name}.json"));
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
            return Ok((text, dir));
        }
    }
    match builtin(name) {
        Some(text) => Ok((text.to_string(), std::env::current_dir().unwrap_or_default())),
        None => Err(CliError::Config(ConfigError::Invalid(format!(
            "unknown preset `{name}`; available: {}",
            names().collect::<Vec<_>>().join(", ")
        )))),
    }
}
