//! Replays the checked-in config fuzz seeds with the fuzz target's
//! round-trip check.

use fraflow_cli::config::RunConfig;
use std::fs;
use std::path::PathBuf;

#[test]
fn config_seeds_round_trip() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/config");
    let mut accepted = 0;
    let mut total = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        total += 1;
        if let Ok(config) = RunConfig::from_json(&text) {
            let again = serde_json::to_string(&config).unwrap();
            assert_eq!(RunConfig::from_json(&again).unwrap(), config, "{}", path.display());
            accepted += 1;
        }
    }
    assert_eq!((accepted, total), (8, 9));
}
