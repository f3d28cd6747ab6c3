#![no_main]

use glyphfix::benchgen;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = benchgen::parse_records(text) {
        let mut out = Vec::new();
        benchgen::write_records(&mut out, &records).unwrap();
        assert_eq!(benchgen::parse_records(std::str::from_utf8(&out).unwrap()).unwrap(), records);
    }
});
