#![no_main]

use glyphfix::benchgen;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|prompt: &str| {
    for k in benchgen::extract_keywords(prompt) {
        assert!(!k.is_empty());
        assert!(prompt.contains(k.as_str()));
    }
});
