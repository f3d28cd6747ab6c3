mod common;

use std::collections::BTreeSet;

use glyphfix::annealer::{self, AnnealConfig, MoveMode};
use glyphfix::benchgen::{self, Augmentation};
use glyphfix::geometry::{self, BoundingBox, Canvas, Layout, LayoutEntry};
use glyphfix::glyph::{self, FontSpec, GrayImage, BACKGROUND};
use glyphfix::pipeline::{
    self, detect_misspellings, min_cost_assignment, GenerateRequest, GeneratorBackend, NoiseModel, OcrResult, OcrWord,
    PipelineConfig, SimGenerator, Target,
};
use glyphfix::seed;
use glyphfix::textmetrics::{self, levenshtein, word_metrics, Prf, WordSet};
use proptest::prelude::*;

use common::*;

fn arb_box(side: i32) -> impl Strategy<Value = BoundingBox> {
    (0..side - 1, 0..side - 1, 1..=side / 2, 1..=side / 2).prop_map(move |(x, y, w, h)| {
        let w = w.min(side - x);
        let h = h.min(side - y);
        BoundingBox::from_origin(x, y, w, h).unwrap()
    })
}

fn arb_layout(side: i32, max: usize) -> impl Strategy<Value = Layout> {
    prop::collection::vec(arb_box(side), 1..=max)
        .prop_map(move |boxes| layout_of(Canvas::new(side as u32, side as u32).unwrap(), &boxes))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pair_overlap_matches_grid(a in arb_box(64), b in arb_box(64)) {
        prop_assert_eq!(geometry::pair_overlap_area(&a, &b), grid_pair_overlap(&a, &b));
        prop_assert_eq!(geometry::pair_overlap_area(&a, &b), geometry::pair_overlap_area(&b, &a));
    }

    #[test]
    fn layout_measures_match_grid(layout in arb_layout(64, 8)) {
        let boxes: Vec<BoundingBox> = layout.boxes().copied().collect();
        let m = grid_measure(layout.canvas(), &boxes);
        prop_assert_eq!(geometry::total_overlap_area(&layout), m.total_overlap);
        prop_assert_eq!(geometry::union_area(&boxes), m.union);
        let energy = geometry::weighted_overlap_energy(&layout);
        prop_assert!(energy >= 0.0);
        prop_assert_eq!(energy == 0.0, m.total_overlap == 0);
    }

    #[test]
    fn measures_are_translation_invariant(layout in arb_layout(64, 6), dx in -200i32..200, dy in -200i32..200) {
        let boxes: Vec<BoundingBox> = layout.boxes().copied().collect();
        let moved: Vec<BoundingBox> = boxes.iter().map(|b| b.translate(dx, dy)).collect();
        prop_assert_eq!(geometry::union_area(&boxes), geometry::union_area(&moved));
        let pairs = |v: &[BoundingBox]| -> i64 {
            let mut s = 0;
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    s += geometry::pair_overlap_area(&v[i], &v[j]);
                }
            }
            s
        };
        prop_assert_eq!(pairs(&boxes), pairs(&moved));
    }

    #[test]
    fn clamp_is_minimal(b in arb_box(64), dx in -80i32..80, dy in -80i32..80) {
        let canvas = Canvas::new(64, 64).unwrap();
        let moved = b.translate(dx, dy);
        let c = canvas.clamp(&moved).unwrap();
        prop_assert!(canvas.contains(&c));
        prop_assert_eq!((c.width(), c.height()), (b.width(), b.height()));
        let sx = (c.x0 - moved.x0).abs();
        let need_x = (-moved.x0).max(0).max(moved.x1 - 64);
        prop_assert_eq!(sx, need_x.max(0));
        if canvas.contains(&moved) {
            prop_assert_eq!(c, moved);
        }
    }

    #[test]
    fn annealer_invariants(layout in arb_layout(96, 7), seed in any::<u64>(), all in any::<bool>()) {
        let config = AnnealConfig {
            seed,
            move_mode: if all { MoveMode::AllBoxes } else { MoveMode::SingleBox },
            ..Default::default()
        };
        let (best, trace) = annealer::optimize(&layout, &config);
        prop_assert!(geometry::weighted_overlap_energy(&best) <= geometry::weighted_overlap_energy(&layout));
        for (a, b) in layout.entries().iter().zip(best.entries()) {
            prop_assert_eq!(&a.word, &b.word);
            prop_assert_eq!((a.bbox.width(), a.bbox.height()), (b.bbox.width(), b.bbox.height()));
            prop_assert!(layout.canvas().contains(&b.bbox));
        }
        prop_assert!(trace.steps.len() <= config.max_iterations);
        let (again, trace2) = annealer::optimize(&layout, &config);
        prop_assert_eq!(best, again);
        prop_assert_eq!(trace.steps, trace2.steps);
    }

    #[test]
    fn zero_temperature_is_greedy(layout in arb_layout(96, 6), seed in any::<u64>()) {
        // with no cooling headroom every accepted move must be strictly downhill
        let config = AnnealConfig {
            seed,
            initial_temperature: 1e-9,
            cooling_rate: 1.0,
            ..Default::default()
        };
        let (_, trace) = annealer::optimize(&layout, &config);
        for s in trace.steps.iter().skip(1).filter(|s| s.accepted) {
            prop_assert!(s.energy_after < s.energy_before);
        }
    }

    #[test]
    fn levenshtein_matches_dp(a in "[abc ]{0,20}", b in "[abc ]{0,20}") {
        prop_assert_eq!(levenshtein(&a, &b), dp_levenshtein(&a, &b));
        prop_assert_eq!(textmetrics::nld(&a, &b), dp_nld(&a, &b));
    }

    #[test]
    fn levenshtein_is_a_metric(a in "\\PC{0,12}", b in "\\PC{0,12}", c in "\\PC{0,12}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }

    #[test]
    fn word_metrics_swap_precision_and_recall(t in prop::collection::vec("[ab]{1,2}", 0..8), p in prop::collection::vec("[ab]{1,2}", 0..8)) {
        let (t, p) = (WordSet::from_words(&t), WordSet::from_words(&p));
        let fwd = word_metrics(&t, &p);
        let rev = word_metrics(&p, &t);
        prop_assert_eq!(fwd.precision, rev.recall);
        prop_assert_eq!(fwd.recall, rev.precision);
        prop_assert_eq!(fwd.f1, rev.f1);
        prop_assert_eq!(fwd.accuracy, rev.accuracy);
        for v in [fwd.precision, fwd.recall, fwd.f1, fwd.accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(fwd.accuracy <= fwd.f1);
    }

    #[test]
    fn perfect_text_scores_perfectly(words in prop::collection::vec("[A-Za-z]{1,8}", 1..6)) {
        let text = words.join(" ");
        let s = textmetrics::score_text(&text, &text.to_lowercase());
        prop_assert_eq!(s.word, Prf::PERFECT);
        prop_assert_eq!(s.char, Prf::PERFECT);
        prop_assert!(s.sentence_exact);
        prop_assert_eq!(s.nld, 0.0);
    }

    #[test]
    fn hungarian_matches_brute_force(costs in prop::collection::vec(prop::collection::vec(0u8..20, 1..=5), 1..=5)) {
        let cols = costs[0].len();
        let costs: Vec<Vec<f64>> = costs.into_iter().map(|mut r| { r.resize(cols, 7); r.into_iter().map(f64::from).collect() }).collect();
        let assigned = min_cost_assignment(&costs);
        let used: Vec<usize> = assigned.iter().flatten().copied().collect();
        prop_assert_eq!(used.len(), costs.len().min(cols));
        prop_assert_eq!(used.iter().collect::<BTreeSet<_>>().len(), used.len());
        let total: f64 = assigned.iter().enumerate().filter_map(|(r, c)| c.map(|c| costs[r][c])).sum();
        prop_assert_eq!(total, brute_force_assignment_cost(&costs));
    }

    #[test]
    fn detection_is_permutation_invariant(
        noise_seed in any::<u64>(),
        order in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let words = ["NEON", "SIGN", "OPEN", "LATE", "NEON", "BAR"];
        let canvas = Canvas::new(300, 300).unwrap();
        let layout = Layout::new(canvas, words.iter().enumerate().map(|(i, w)| LayoutEntry {
            word: (*w).into(),
            bbox: BoundingBox::from_origin(10 + 45 * i as i32, 20 + 30 * (i as i32 % 3), 40, 20).unwrap(),
        }).collect()).unwrap();
        let mut rng = seed::rng(noise_seed);
        let detected: Vec<OcrWord> = layout.entries().iter().map(|e| OcrWord {
            word: if rand::Rng::gen_bool(&mut rng, 0.4) { pipeline::substitute_one(&e.word, &mut rng) } else { e.word.clone() },
            bbox: e.bbox.translate(rand::Rng::gen_range(&mut rng, -3..=3), 0),
            confidence: 1.0,
        }).collect();
        let a = OcrResult { detected: detected.clone() };
        let b = OcrResult { detected: order.iter().map(|&i| detected[i].clone()).collect() };
        prop_assert_eq!(detect_misspellings(&layout, &a), detect_misspellings(&layout, &b));
        prop_assert_eq!(pipeline::aligned_prediction(&layout, &a), pipeline::aligned_prediction(&layout, &b));
    }

    #[test]
    fn flagged_iff_wrong_under_clean_reads(flags in prop::collection::vec(0u8..3, 1..6)) {
        // 0 = read correctly, 1 = misspelled, 2 = missing
        let canvas = Canvas::new(400, 100).unwrap();
        let words = benchgen::pseudo_words(flags.len(), 9);
        let layout = Layout::new(canvas, words.iter().enumerate().map(|(i, w)| LayoutEntry {
            word: w.clone(),
            bbox: BoundingBox::from_origin(60 * i as i32, 10, 55, 30).unwrap(),
        }).collect()).unwrap();
        let mut rng = seed::rng(3);
        let detected = layout.entries().iter().zip(&flags).filter(|(_, f)| **f != 2).map(|(e, f)| OcrWord {
            word: if *f == 1 { pipeline::substitute_one(&e.word, &mut rng) } else { e.word.clone() },
            bbox: e.bbox,
            confidence: 1.0,
        }).collect();
        let flagged: Vec<usize> = detect_misspellings(&layout, &OcrResult { detected }).iter().map(|f| f.index).collect();
        let want: Vec<usize> = flags.iter().enumerate().filter(|(_, f)| **f != 0).map(|(i, _)| i).collect();
        prop_assert_eq!(flagged, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repaint_touches_only_targets(seed in any::<u64>(), picks in prop::collection::btree_set(0usize..4, 1..=4)) {
        let canvas = Canvas::new(256, 128).unwrap();
        let words = ["ALPHA", "BETA", "GAMMA", "DELTA"];
        let layout = Layout::new(canvas, words.iter().enumerate().map(|(i, w)| LayoutEntry {
            word: (*w).into(),
            bbox: BoundingBox::from_origin(4 + 62 * i as i32, 20 + 10 * i as i32, 58, 24).unwrap(),
        }).collect()).unwrap();
        let font = FontSpec::SyntheticBlock;
        let noise = NoiseModel { p_missing_word: 0.2, p_misspell: 0.5, p_blur: 0.2, edits_per_misspelling: 1 };
        let mut generator = SimGenerator::new(noise, font.clone(), seed);
        let glyph_all = glyph::render(&layout, &font);
        let targets_all: Vec<Target> = glyph_all.words.iter().map(|w| Target { index: w.index, region: w.layout_box }).collect();
        let first = generator.generate(&GenerateRequest { prompt: "p", glyph: &glyph_all, prior: None, targets: &targets_all }).unwrap();

        let correction = glyph::render_correction(&layout, &picks, &font).unwrap();
        let targets: Vec<Target> = picks.iter().map(|&i| Target { index: i, region: layout.entries()[i].bbox }).collect();
        let second = generator.generate(&GenerateRequest { prompt: "p", glyph: &correction, prior: Some(&first), targets: &targets }).unwrap();
        for y in 0..128 {
            for x in 0..256 {
                let inside = targets.iter().any(|t| t.region.contains_point(x, y));
                if !inside {
                    prop_assert_eq!(first.image.get(x as usize, y as usize), second.image.get(x as usize, y as usize));
                }
            }
        }
        let m1 = first.manifest.unwrap();
        let m2 = second.manifest.unwrap();
        for e in m1.entries.iter().filter(|e| !picks.contains(&e.index)) {
            prop_assert!(m2.entries.contains(e));
        }
    }

    #[test]
    fn pipeline_f1_never_drops(seed in any::<u64>(), n in 1usize..8, p in 0.0f64..0.9) {
        let config = PipelineConfig {
            noise: NoiseModel { p_missing_word: 0.1, p_misspell: p, p_blur: 0.1, edits_per_misspelling: 1 },
            seed,
            iterations: 3,
            ..Default::default()
        };
        let (mut g, mut o) = config.sim_backends();
        let keywords = benchgen::pseudo_words(n, seed);
        let out = pipeline::run("p", &keywords, None, &config, &mut g, &mut o).unwrap();
        let h = out.word_f1_history();
        prop_assert!(h.windows(2).all(|w| w[1] >= w[0]), "{:?}", h);
        prop_assert!(out.layout_after.overlap_energy <= out.layout_before.overlap_energy);
    }

    #[test]
    fn render_stays_inside_boxes(layout in arb_layout(160, 5)) {
        let g = glyph::render(&layout, &FontSpec::SyntheticBlock);
        let regions: Vec<BoundingBox> = g.words.iter().map(|w| w.region).collect();
        for w in &g.words {
            prop_assert!(w.layout_box.contains(&w.region));
            for c in &w.chars {
                prop_assert!(w.region.contains(c));
            }
        }
        let mut blank = GrayImage::new(g.width(), g.height());
        for r in &regions {
            blank.copy_region(&g.image, r);
        }
        prop_assert_eq!(blank, g.image.clone());
        prop_assert!(g.image.pixels().iter().all(|p| *p == BACKGROUND || *p == glyph::INK));
    }

    #[test]
    fn augmentations_are_bounded(word in "[A-Za-z]{2,12}", s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let sp = benchgen::augment_spelling(&word, &mut rng).unwrap();
        prop_assert_ne!(&sp, &word);
        prop_assert!(levenshtein(&sp, &word) <= 2);
        let kb = benchgen::augment_keyboard(&word, &mut rng).unwrap();
        prop_assert_eq!(levenshtein(&kb, &word), 1);
        let (a, b) = benchgen::augment_split(&word, &mut rng).unwrap();
        prop_assert_eq!(format!("{a}{b}"), word.clone());
        prop_assert_eq!(levenshtein(&format!("{a} {b}"), &word), 1);
        for aug in Augmentation::ALL {
            let x = benchgen::augment_word(&word, aug, &mut seed::rng(s));
            let y = benchgen::augment_word(&word, aug, &mut seed::rng(s));
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn filter_hard_is_idempotent(counts in prop::collection::vec(0usize..12, 0..20)) {
        let records: Vec<_> = counts.iter().enumerate().map(|(i, &n)| benchgen::BenchRecord {
            id: i.to_string(),
            prompt: String::new(),
            keywords: vec!["w".into(); n],
            subset: benchgen::Subset::MarioHard,
            augmentation: None,
            seed: 0,
        }).collect();
        let once = benchgen::filter_hard(&records, 4);
        prop_assert_eq!(benchgen::filter_hard(&once, 4), once.clone());
        prop_assert_eq!(once.len(), counts.iter().filter(|n| **n >= 4).count());
    }

    #[test]
    fn layout_json_round_trips(layout in arb_layout(200, 6)) {
        prop_assert_eq!(Layout::from_json(&layout.to_json()).unwrap(), layout);
    }

    #[test]
    fn pgm_round_trips(w in 1usize..20, h in 1usize..20, s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let pixels: Vec<u8> = (0..w * h).map(|_| rand::Rng::gen(&mut rng)).collect();
        let img = GrayImage::from_raw(w, h, pixels).unwrap();
        prop_assert_eq!(GrayImage::from_pgm(&img.to_pgm()).unwrap(), img);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsers_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256), text in "\\PC{0,200}") {
        let _ = GrayImage::from_pgm(&bytes);
        let mut pgm = b"P5\n4 4\n255\n".to_vec();
        pgm.extend_from_slice(&bytes);
        let _ = GrayImage::from_pgm(&pgm);
        let _ = OcrResult::read_jsonl(bytes.as_slice());
        for t in [text.as_str(), &String::from_utf8_lossy(&bytes)] {
            let _ = Layout::from_json(t);
            let _ = benchgen::parse_records(t);
            let _ = glyph::BitmapFont::parse(t);
            let _ = glyph::BitmapFont::parse(&format!("size 3 2\nchar A\n{t}"));
            for k in benchgen::extract_keywords(t) {
                prop_assert!(!k.is_empty() && t.contains(k.as_str()));
            }
        }
    }
}
