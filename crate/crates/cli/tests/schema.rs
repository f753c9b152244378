//! The published config schema tracks the config types. Set
//! `FRAFLOW_UPDATE_SCHEMA=1` to rewrite it after changing them.

use fraflow_cli::config::RunConfig;
use std::path::Path;

#[test]
fn published_schema_is_current() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run-config.schema.json");
    let generated = RunConfig::schema();
    if std::env::var_os("FRAFLOW_UPDATE_SCHEMA").is_some() {
        std::fs::write(&path, &generated).unwrap();
    }
    let published = std::fs::read_to_string(&path).unwrap_or_default();
    assert!(
        published == generated,
        "{} is stale; rerun with FRAFLOW_UPDATE_SCHEMA=1",
        path.display()
    );
}

#[test]
fn presets_use_only_schema_keys() {
    let schema: serde_json::Value = serde_json::from_str(&RunConfig::schema()).unwrap();
    let top = schema["properties"].as_object().unwrap();
    for (name, text) in fraflow_cli::presets::PRESETS {
        let preset: serde_json::Value = serde_json::from_str(text).unwrap();
        for key in preset.as_object().unwrap().keys() {
            assert!(top.contains_key(key), "{name}: {key}");
        }
    }
}
