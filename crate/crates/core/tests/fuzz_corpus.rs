//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets drive, so a seed that panics fails the ordinary test run.

use std::fs;
use std::path::PathBuf;

use glyphfix::benchgen;
use glyphfix::geometry::Layout;
use glyphfix::glyph::{BitmapFont, GrayImage};
use glyphfix::pipeline::OcrResult;
use glyphfix::textmetrics;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn layout_seeds() {
    let mut accepted = 0;
    for (name, data) in seeds("parse_layout") {
        if let Ok(l) = Layout::from_json(std::str::from_utf8(&data).unwrap()) {
            assert_eq!(Layout::from_json(&l.to_json()).unwrap(), l, "{name}");
            accepted += 1;
        }
    }
    assert_eq!(accepted, 2);
}

#[test]
fn pgm_seeds() {
    let ok: Vec<String> = seeds("parse_pgm")
        .into_iter()
        .filter(|(_, d)| GrayImage::from_pgm(d).is_ok())
        .map(|(n, _)| n)
        .collect();
    assert_eq!(ok, ["seed-3x2.pgm", "seed-comment.pgm"]);
}

#[test]
fn record_seeds() {
    let results: Vec<bool> = seeds("parse_records")
        .into_iter()
        .map(|(_, d)| benchgen::parse_records(std::str::from_utf8(&d).unwrap()).is_ok())
        .collect();
    assert_eq!(results, [false, true]);
}

#[test]
fn ocr_seeds() {
    for (name, data) in seeds("parse_ocr") {
        match OcrResult::read_jsonl(data.as_slice()) {
            Ok(r) => {
                assert_eq!(name, "seed-two.jsonl");
                let c = r.clipped_to(512, 512);
                assert_eq!(c.detected[1].bbox.x0, 0);
                assert_eq!(c.detected[1].bbox.x1, 512);
            }
            Err(_) => assert_eq!(name, "seed-bad-confidence.jsonl"),
        }
    }
}

#[test]
fn font_seeds() {
    for (name, data) in seeds("parse_font") {
        let parsed = BitmapFont::parse(std::str::from_utf8(&data).unwrap());
        assert_eq!(parsed.is_ok(), name != "seed-truncated.txt", "{name}");
    }
}

#[test]
fn keyword_seeds() {
    let all: Vec<Vec<String>> = seeds("extract_keywords")
        .into_iter()
        .map(|(_, d)| benchgen::extract_keywords(std::str::from_utf8(&d).unwrap()))
        .collect();
    assert_eq!(all[0], ["Amazon", "Cloud", "Player", "Music"]);
    assert!(all[1].is_empty());
}

#[test]
fn metric_seeds() {
    for (_, data) in seeds("text_metrics") {
        let text = String::from_utf8(data).unwrap();
        let (a, b) = text.split_once('\0').unwrap();
        let s = textmetrics::score_text(a, b);
        assert!((0.0..=100.0).contains(&s.nld));
    }
}
