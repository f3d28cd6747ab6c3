use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use glyphfix::annealer;
use glyphfix::benchgen::{self, AugmentConfig, Augmentation, BenchRecord, RwcConfig};
use glyphfix::geometry::Layout;
use glyphfix::glyph::{self, FontSpec};
use glyphfix::pipeline::LayoutSummary;
use glyphfix::seed::derive_seed;
use glyphfix::textmetrics::{score_text, EvalReport, RecordMetrics};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::OutputDir;
use crate::{AugArg, EvaluateArgs, Failure, GenbenchArgs, InputContext, OptimizeArgs, RenderArgs, SubsetArg};

pub fn load_layout(path: &Path) -> Result<Layout, Failure> {
    Layout::from_path(path)
        .with_context(|| format!("layout {}", path.display()))
        .input()
}

pub fn load_font(name: &str) -> Result<FontSpec, Failure> {
    FontSpec::resolve(name).with_context(|| format!("font {name}")).input()
}

pub fn optimize(args: OptimizeArgs) -> Result<ExitCode, Failure> {
    let layout = load_layout(&args.layout)?;
    let config = args.anneal.config(args.seed);
    config.validate().input()?;
    let (best, trace) = annealer::optimize(&layout, &config);

    let mut out = OutputDir::create(&args.out)?;
    out.write("layout.json", best.to_json().as_bytes())?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    out.write("trace.csv", &csv)?;
    let summary = json!({
        "before": LayoutSummary::of(&layout),
        "after": LayoutSummary::of(&best),
        "steps": trace.steps.len(),
        "accepted": trace.steps.iter().filter(|s| s.accepted).count(),
        "initial_energy": trace.initial_energy,
        "best_energy": trace.best_energy,
    });
    out.json("summary.json", &summary)?;
    out.finish("optimize", Some(args.seed), serde_json::to_value(config)?)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(ExitCode::SUCCESS)
}

pub fn render(args: RenderArgs) -> Result<ExitCode, Failure> {
    let layout = load_layout(&args.layout)?;
    let font = load_font(&args.font)?;
    let g = glyph::render(&layout, &font);

    let mut out = OutputDir::create(&args.out)?;
    out.write("glyph.pgm", &g.image.to_pgm())?;
    if args.png {
        let mut png = Vec::new();
        g.image.write_png(&mut png)?;
        out.write("glyph.png", &png)?;
    }
    out.json("regions.json", &g.regions_document())?;
    out.finish("render", None, json!({ "font": font.to_string(), "png": args.png }))?;
    for &i in &g.unrenderable {
        eprintln!(
            "warning: keyword {i} ({:?}) does not fit its box",
            layout.entries()[i].word
        );
    }
    Ok(ExitCode::SUCCESS)
}

/// Records JSONL, or plain prompts one per line.
fn read_prompts(path: &Path, prefix: &str) -> Result<Vec<BenchRecord>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with('{') {
        return benchgen::parse_records(&text)
            .with_context(|| format!("records {}", path.display()))
            .input();
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, p)| benchgen::record_from_prompt(format!("{prefix}-{i:06}"), p, 0))
        .collect())
}

fn read_words(path: &Path) -> Result<Vec<String>, Failure> {
    let f = fs::File::open(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    let mut words = Vec::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line.input()?;
        let w = line.trim();
        if !w.is_empty() && !w.starts_with('#') {
            words.push(w.to_owned());
        }
    }
    Ok(words)
}

pub fn genbench(args: GenbenchArgs) -> Result<ExitCode, Failure> {
    let needs_input = args.subset != SubsetArg::Rwc;
    let input = match (&args.input, needs_input) {
        (Some(p), true) => Some(p),
        (None, true) => return Err(Failure::Input(anyhow!("--input is required for this subset"))),
        (_, false) => None,
    };
    if !(0.0..=1.0).contains(&args.punctuation_prob) || !(0.0..=1.0).contains(&args.aug_prob) {
        return Err(Failure::Input(anyhow!("probabilities must lie in [0, 1]")));
    }

    let (records, settings) = match args.subset {
        SubsetArg::Rwc => {
            let words = match &args.words {
                Some(p) => read_words(p)?,
                None => benchgen::pseudo_words(500, derive_seed(args.seed, u64::MAX)),
            };
            let config = RwcConfig {
                template: args.template.clone(),
                punctuation_probability: args.punctuation_prob,
                ..RwcConfig::default()
            };
            let records = benchgen::rwc_generate(args.count as usize, &words, &config, args.seed).input()?;
            (
                records,
                json!({ "subset": "rwc", "rwc": config, "word_list_size": words.len() }),
            )
        }
        SubsetArg::MarioHardFilter => {
            let source = read_prompts(input.expect("checked"), "mario")?;
            let kept = benchgen::filter_hard(&source, args.min_keywords);
            (
                kept,
                json!({ "subset": "mario-hard-filter", "min_keywords": args.min_keywords }),
            )
        }
        SubsetArg::Aug => {
            let source = read_prompts(input.expect("checked"), "aug")?;
            let config = AugmentConfig {
                probability: args.aug_prob,
                augmentation: args.augmentation.map(|a| match a {
                    AugArg::Spelling => Augmentation::Spelling,
                    AugArg::Keyboard => Augmentation::Keyboard,
                    AugArg::Splitting => Augmentation::Splitting,
                }),
            };
            let records = benchgen::filter_hard(&source, args.min_keywords)
                .iter()
                .enumerate()
                .map(|(i, r)| benchgen::augment_record(r, &config, derive_seed(args.seed, i as u64)))
                .collect();
            (
                records,
                json!({ "subset": "aug", "augment": config, "min_keywords": args.min_keywords }),
            )
        }
    };

    let mut out = OutputDir::create(&args.out)?;
    let mut jsonl = Vec::new();
    benchgen::write_records(&mut jsonl, &records)?;
    out.write("records.jsonl", &jsonl)?;
    let stats = benchgen::stats(&records).ok();
    out.json("stats.json", &stats)?;
    out.finish("genbench", Some(args.seed), settings)?;
    match stats {
        Some(s) => println!("{}", serde_json::to_string(&s)?),
        None => eprintln!("warning: no records generated"),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Prediction {
    id: String,
    text: String,
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    let mut preds = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))
            .input()?;
        if preds.insert(p.id.clone(), p.text).is_some() {
            return Err(Failure::Input(anyhow!(
                "{} line {}: duplicate id {:?}",
                path.display(),
                i + 1,
                p.id
            )));
        }
    }
    Ok(preds)
}

#[derive(Serialize)]
struct Evaluation<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    /// Truth records with no prediction, scored as empty text.
    missing_predictions: Vec<String>,
}

pub fn evaluate(args: EvaluateArgs) -> Result<ExitCode, Failure> {
    let text = fs::read_to_string(&args.truth)
        .with_context(|| format!("reading {}", args.truth.display()))
        .input()?;
    let truth = benchgen::parse_records(&text)
        .with_context(|| format!("records {}", args.truth.display()))
        .input()?;
    let mut seen = HashSet::new();
    for r in &truth {
        if !seen.insert(r.id.as_str()) {
            return Err(Failure::Input(anyhow!(
                "duplicate record id {:?} in {}",
                r.id,
                args.truth.display()
            )));
        }
    }
    let preds = read_predictions(&args.pred)?;
    if let Some(orphan) = preds.keys().find(|id| !seen.contains(id.as_str())) {
        return Err(Failure::Input(anyhow!("prediction id {orphan:?} has no truth record")));
    }

    let mut missing = Vec::new();
    let mut records: Vec<RecordMetrics> = truth
        .iter()
        .map(|r| {
            let pred = preds.get(&r.id).map(String::as_str).unwrap_or_else(|| {
                missing.push(r.id.clone());
                ""
            });
            RecordMetrics {
                id: r.id.clone(),
                keyword_count: r.keywords.len(),
                scores: score_text(&r.keywords.join(" "), pred),
                ..Default::default()
            }
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let report = EvalReport::new(records, args.clipscore)
        .map_err(|_| anyhow!("no truth records"))
        .input()?;

    let mut out = OutputDir::create(&args.out)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.write("report.csv", &csv)?;
    out.json(
        "report.json",
        &Evaluation {
            report: &report,
            missing_predictions: missing.clone(),
        },
    )?;
    out.finish("evaluate", None, json!({ "clipscore": args.clipscore }))?;
    if !missing.is_empty() {
        eprintln!(
            "warning: {} records had no prediction and were scored as empty",
            missing.len()
        );
    }
    println!("{}", serde_json::to_string(&report.aggregate)?);
    Ok(ExitCode::SUCCESS)
}
