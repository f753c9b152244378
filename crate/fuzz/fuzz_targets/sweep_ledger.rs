#![no_main]

use fraflow::io::parse_ledger;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = parse_ledger(text) {
        let rebuilt: String = entries.iter().map(|e| e.to_line()).collect();
        assert_eq!(parse_ledger(&rebuilt).expect("re-parse"), entries);
    }
});
