#![no_main]

use glyphfix::textmetrics;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|pair: (&str, &str)| {
    let (truth, pred) = pair;
    let s = textmetrics::score_text(truth, pred);
    assert!((0.0..=100.0).contains(&s.nld));
    for v in [s.word.f1, s.char.f1, s.word.accuracy, s.char.accuracy] {
        assert!((0.0..=1.0).contains(&v));
    }
});
