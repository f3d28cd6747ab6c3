#![no_main]

use glyphfix::geometry::{self, Layout};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(layout) = Layout::from_json(text) {
        // anything accepted must survive a round trip and be measurable
        assert_eq!(Layout::from_json(&layout.to_json()).unwrap(), layout);
        let _ = geometry::layout_iou(&layout);
        let _ = geometry::weighted_overlap_energy(&layout);
    }
});
