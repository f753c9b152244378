#![no_main]

use fraflow::io::parse_pair_table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pair) = parse_pair_table(text) {
        for t in [0.0, 0.5, 1.0, 10.0] {
            let _ = (pair.k.eval(t), pair.l.eval(t), pair.k.antiderivative(t));
        }
    }
});
