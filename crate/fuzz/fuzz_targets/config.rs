#![no_main]

use fraflow_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::from_json(text) {
        let again = serde_json::to_string(&config).expect("valid configs serialize");
        assert_eq!(RunConfig::from_json(&again).expect("round trip"), config);
    }
});
