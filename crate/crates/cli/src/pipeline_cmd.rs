use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use glyphfix::benchgen::{self, BenchRecord, Subset};
use glyphfix::geometry::Layout;
use glyphfix::glyph::FontSpec;
use glyphfix::pipeline::{
    self, ExecGenerator, ExecOcr, GeneratorBackend, MaskSource, NoiseModel, OcrBackend, PipelineConfig, PipelineOutput,
    SimGenerator, SimOcr,
};
use glyphfix::seed::{derive_seed, derive_seed_for};
use glyphfix::textmetrics::{EvalReport, RecordMetrics};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::commands::{load_font, load_layout};
use crate::output::{safe_name, write_atomic, write_json, OutputDir};
use crate::{BackendArg, Failure, InputContext, MaskArg, PipelineArgs};

struct Job {
    record: BenchRecord,
    dir_name: String,
    layout: Option<Layout>,
}

#[derive(Serialize)]
struct Failed {
    id: String,
    error: String,
}

#[derive(Serialize)]
struct PipelineReport<'a> {
    #[serde(flatten)]
    report: Option<&'a EvalReport>,
    failures: &'a [Failed],
}

fn jobs_from_args(args: &PipelineArgs) -> Result<Vec<Job>, Failure> {
    if let Some(prompt) = &args.prompt {
        let keywords = if args.keywords.is_empty() {
            benchgen::extract_keywords(prompt)
        } else {
            args.keywords.clone()
        };
        let layout = args.layout.as_deref().map(load_layout).transpose()?;
        let keywords = match &layout {
            Some(l) => {
                if !args.keywords.is_empty() && args.keywords.iter().map(String::as_str).ne(l.words()) {
                    return Err(Failure::Input(anyhow!(
                        "--keyword values disagree with the layout's words"
                    )));
                }
                l.words().map(str::to_owned).collect()
            }
            None => keywords,
        };
        if keywords.is_empty() {
            return Err(Failure::Input(anyhow!(
                "no keywords: quote them in the prompt or pass --keyword"
            )));
        }
        let record = BenchRecord {
            id: "prompt".into(),
            prompt: prompt.clone(),
            keywords,
            subset: Subset::MarioHard,
            augmentation: None,
            seed: 0,
        };
        return Ok(vec![Job {
            dir_name: "prompt".into(),
            record,
            layout,
        }]);
    }
    let path = args.records.as_ref().expect("clap requires --records or --prompt");
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .input()?;
    let records = benchgen::parse_records(&text)
        .with_context(|| format!("records {}", path.display()))
        .input()?;
    let mut names: HashMap<String, String> = HashMap::new();
    let mut jobs = Vec::with_capacity(records.len());
    for record in records {
        let dir_name = safe_name(&record.id);
        if let Some(other) = names.insert(dir_name.clone(), record.id.clone()) {
            return Err(Failure::Input(anyhow!(
                "record ids {other:?} and {:?} collide (duplicate or same directory name)",
                record.id
            )));
        }
        jobs.push(Job {
            record,
            dir_name,
            layout: None,
        });
    }
    Ok(jobs)
}

fn backends(
    args: &PipelineArgs,
    config: &PipelineConfig,
    scratch: &Path,
) -> (Box<dyn GeneratorBackend>, Box<dyn OcrBackend>) {
    let generator: Box<dyn GeneratorBackend> = match &args.backend {
        BackendArg::Sim => Box::new(SimGenerator::new(
            config.noise,
            config.font.clone(),
            derive_seed(config.seed, 1),
        )),
        BackendArg::Exec(p) => Box::new(ExecGenerator::new(p, scratch.join("backend"))),
    };
    let ocr: Box<dyn OcrBackend> = match &args.ocr {
        BackendArg::Sim => Box::new(SimOcr::new(derive_seed(config.seed, 2))),
        BackendArg::Exec(p) => Box::new(ExecOcr::new(p, scratch.join("ocr"))),
    };
    (generator, ocr)
}

fn write_record(dir: &Path, id: &str, out: &PipelineOutput, png: bool) -> anyhow::Result<()> {
    let put = |name: &str, bytes: &[u8]| write_atomic(&dir.join(name), bytes);
    put("initial_layout.json", out.initial_layout.to_json().as_bytes())?;
    put("layout.json", out.layout.to_json().as_bytes())?;
    put("glyph.pgm", &out.glyph.image.to_pgm())?;
    write_json(&dir.join("regions.json"), &out.glyph.regions_document())?;
    put("initial.pgm", &out.initial_image.image.to_pgm())?;
    put("final.pgm", &out.image.image.to_pgm())?;
    if png {
        let mut buf = Vec::new();
        out.image.image.write_png(&mut buf)?;
        put("final.png", &buf)?;
    }
    if let Some(m) = &out.image.manifest {
        write_json(&dir.join("text_manifest.json"), m)?;
    }
    let mut ocr = Vec::new();
    out.final_snapshot.ocr.write_jsonl(&mut ocr)?;
    put("ocr.jsonl", &ocr)?;
    write_json(
        &dir.join("trace.json"),
        &json!({
            "id": id,
            "layout_before": out.layout_before,
            "layout_after": out.layout_after,
            "anneal_steps": out.anneal_steps,
            "unrenderable": out.unrenderable,
            "initial_scores": out.initial_scores,
            "final_scores": out.final_snapshot.scores,
            "word_f1_history": out.word_f1_history(),
            "rounds": out.rounds,
        }),
    )?;
    Ok(())
}

/// Run one record into `records/.<name>.partial`, then rename it into place.
fn run_job(args: &PipelineArgs, base: &PipelineConfig, records_dir: &Path, job: &Job) -> anyhow::Result<RecordMetrics> {
    let config = PipelineConfig {
        seed: derive_seed_for(base.seed, &job.record.id),
        ..base.clone()
    };
    let final_dir = records_dir.join(&job.dir_name);
    let partial = records_dir.join(format!(".{}.partial", job.dir_name));
    if partial.exists() {
        fs::remove_dir_all(&partial)?;
    }
    fs::create_dir_all(&partial)?;
    let (mut generator, mut ocr) = backends(args, &config, &partial.join("scratch"));
    let out = pipeline::run(
        &job.record.prompt,
        &job.record.keywords,
        job.layout.clone(),
        &config,
        &mut generator,
        &mut ocr,
    )?;
    write_record(&partial, &job.record.id, &out, args.png)?;
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir)?;
    }
    fs::rename(&partial, &final_dir)?;
    if !out.unrenderable.is_empty() {
        eprintln!(
            "warning: {}: keywords {:?} do not fit their boxes",
            job.record.id, out.unrenderable
        );
    }
    Ok(out.record_metrics(job.record.id.clone()))
}

pub fn run(args: PipelineArgs) -> Result<ExitCode, Failure> {
    let font: FontSpec = load_font(&args.font)?;
    let config = PipelineConfig {
        iterations: args.iterations,
        accept_if_better: args.accept_if_better,
        anneal: args.anneal.config(derive_seed(args.seed, 0)),
        noise: NoiseModel {
            p_missing_word: args.p_missing,
            p_misspell: args.p_misspell,
            p_blur: args.p_blur,
            edits_per_misspelling: 1,
        },
        font,
        mask_source: match args.mask {
            MaskArg::Detected => MaskSource::Detected,
            MaskArg::Layout => MaskSource::Layout,
        },
        canvas: args.canvas,
        seed: args.seed,
        ..PipelineConfig::default()
    };
    config.validate().input()?;
    let jobs = jobs_from_args(&args)?;
    if jobs.is_empty() {
        return Err(Failure::Input(anyhow!("no records to run")));
    }

    let mut out = OutputDir::create(&args.out)?;
    let records_dir = out.path("records");
    fs::create_dir_all(&records_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs as usize)
        .build()
        .context("building thread pool")?;
    let results: Vec<(String, anyhow::Result<RecordMetrics>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| (job.record.id.clone(), run_job(&args, &config, &records_dir, job)))
            .collect()
    });

    let mut metrics = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(m) => metrics.push(m),
            Err(e) => {
                eprintln!("error: record {id}: {e:#}");
                failures.push(Failed {
                    id,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    metrics.sort_by(|a, b| a.id.cmp(&b.id));
    failures.sort_by(|a, b| a.id.cmp(&b.id));
    let report = EvalReport::new(metrics, None).ok();
    if let Some(r) = &report {
        let mut csv = Vec::new();
        r.write_csv(&mut csv)?;
        out.write("report.csv", &csv)?;
        println!("{}", serde_json::to_string(&r.aggregate)?);
    }
    out.json(
        "report.json",
        &PipelineReport {
            report: report.as_ref(),
            failures: &failures,
        },
    )?;
    out.note("records");
    out.finish(
        "pipeline",
        Some(args.seed),
        json!({
            "iterations": config.iterations,
            "accept_if_better": config.accept_if_better,
            "anneal": config.anneal,
            "noise": {
                "p_missing_word": config.noise.p_missing_word,
                "p_misspell": config.noise.p_misspell,
                "p_blur": config.noise.p_blur,
            },
            "mask_source": config.mask_source,
            "canvas": format!("{}x{}", config.canvas.width, config.canvas.height),
            "font": config.font.to_string(),
            "backend": args.backend.to_string(),
            "ocr": args.ocr.to_string(),
            "jobs": args.jobs,
            "records": jobs.len(),
        }),
    )?;
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
