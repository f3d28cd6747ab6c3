#![no_main]

use glyphfix::pipeline::OcrResult;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(result) = OcrResult::read_jsonl(data) {
        let clipped = result.clipped_to(512, 512);
        assert!(clipped.detected.len() <= result.detected.len());
    }
});
