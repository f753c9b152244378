#![no_main]

use fraflow::io::TrajectoryDump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = TrajectoryDump::decode(data) {
        let bytes = dump.encode();
        assert_eq!(TrajectoryDump::decode(&bytes).expect("re-decode"), dump);
    }
});
