//! The layout → glyph → image → OCR → repaint loop.
//!
//! [`run`] anneals the keyword layout, renders the glyph condition, asks the
//! generator for a first image and then performs `iterations` repaint
//! rounds. Each round reads the current image back with OCR, flags the
//! keywords that came out wrong, renders a glyph holding only those words
//! (correctly spelled) inside their flagged regions, and asks the generator
//! to repaint those regions. With `accept_if_better` a round's image is kept
//! only if its word-level F1 did not drop.

mod align;
mod exec;
mod sim;
mod types;

use std::collections::BTreeSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annealer::{self, AnnealConfig};
use crate::geometry::{self, BoundingBox, Canvas, GeometryError, Layout, LayoutEntry, LayoutError};
use crate::glyph::{self, FontSpec, GlyphImage};
use crate::seed;
use crate::textmetrics::{score_text, RecordMetrics, TextScores};

pub use align::{aligned_prediction, detect_misspellings, min_cost_assignment, Flagged};
pub use exec::{ExecGenerator, ExecOcr};
pub use sim::{
    char_edit, substitute_one, NoiseModel, OcrNoise, ProbabilityError, SimGenerator, SimOcr, BLURRED_CONFIDENCE,
};
pub use types::{
    BackendError, GenerateRequest, GeneratedImage, GeneratorBackend, Manifest, ManifestEntry, OcrBackend,
    OcrParseError, OcrResult, OcrWord, Target,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no keywords to render")]
    NoKeywords,
    #[error("initial generation: {0}")]
    InitialGeneration(#[source] BackendError),
    #[error("repaint round {round}: {source}")]
    Backend {
        round: usize,
        #[source]
        source: BackendError,
    },
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("layout: {0}")]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Config(#[from] annealer::ConfigError),
    #[error(transparent)]
    Noise(#[from] ProbabilityError),
}

/// Which box a misspelled-but-detected word is repainted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskSource {
    /// The box OCR reported for the word.
    #[default]
    Detected,
    /// The keyword's layout box.
    Layout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub iterations: usize,
    pub accept_if_better: bool,
    pub anneal: AnnealConfig,
    /// Failure model of the simulated backends built by [`PipelineConfig::sim_backends`].
    pub noise: NoiseModel,
    pub font: FontSpec,
    pub mask_source: MaskSource,
    /// Canvas used when no layout is supplied.
    pub canvas: Canvas,
    /// Box jitter of the rough layout built when no layout is supplied.
    pub layout_jitter: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            iterations: 2,
            accept_if_better: true,
            anneal: AnnealConfig::default(),
            noise: NoiseModel::default(),
            font: FontSpec::SyntheticBlock,
            mask_source: MaskSource::Detected,
            canvas: Canvas {
                width: 512,
                height: 512,
            },
            layout_jitter: 0.35,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.anneal.validate()?;
        self.noise.validate()?;
        Ok(())
    }

    /// Simulated generator and OCR seeded from this config's seed.
    pub fn sim_backends(&self) -> (SimGenerator, SimOcr) {
        (
            SimGenerator::new(self.noise, self.font.clone(), seed::derive_seed(self.seed, 1)),
            SimOcr::new(seed::derive_seed(self.seed, 2)),
        )
    }
}

/// A plausible but untidy first layout, standing in for a learned layout
/// model: keywords set in wrapped lines at a common text size, then each
/// box jittered by up to `jitter` of its own size, which produces overlaps.
pub fn rough_layout<S: AsRef<str>>(
    keywords: &[S],
    canvas: Canvas,
    font: &FontSpec,
    jitter: f64,
    seed: u64,
) -> Result<Layout, PipelineError> {
    if keywords.is_empty() {
        return Err(PipelineError::NoKeywords);
    }
    let mut rng = seed::rng(seed);
    let (cw, ch) = (canvas.width as i32, canvas.height as i32);
    let margin = cw / 16;
    let usable = (cw - 2 * margin).max(1);
    let longest = keywords
        .iter()
        .map(|k| k.as_ref().chars().count().max(1))
        .max()
        .unwrap_or(1) as i32;
    let cell_w = font.cell_width() as i32;
    let cell_h = font.glyph_height() as i32;
    let scale = (usable / (longest * cell_w)).clamp(1, 3);
    let pad = scale * 2;
    let line_h = cell_h * scale + 2 * pad;
    let gap = cell_w * scale;

    // greedy line wrapping
    let mut lines: Vec<Vec<(usize, i32)>> = vec![Vec::new()];
    let mut x = 0;
    for (i, k) in keywords.iter().enumerate() {
        let w = (k.as_ref().chars().count().max(1) as i32 * cell_w * scale + 2 * pad).min(cw);
        if x > 0 && x + w > usable {
            lines.push(Vec::new());
            x = 0;
        }
        lines.last_mut().expect("nonempty").push((i, w));
        x += w + gap;
    }
    let block_h = lines.len() as i32 * line_h;
    let top = ((ch - block_h) / 2).max(0);

    let mut boxes = vec![
        BoundingBox {
            x0: 0,
            y0: 0,
            x1: 1,
            y1: 1
        };
        keywords.len()
    ];
    for (row, line) in lines.iter().enumerate() {
        let line_w: i32 = line.iter().map(|(_, w)| w).sum::<i32>() + gap * (line.len() as i32 - 1);
        let mut x = ((cw - line_w) / 2).max(0);
        let y = top + row as i32 * line_h;
        for &(i, w) in line {
            let h = line_h.min(ch);
            let jx = (rng.gen_range(-1.0..=1.0) * jitter * f64::from(w)).round() as i32;
            let jy = (rng.gen_range(-1.0..=1.0) * jitter * f64::from(h)).round() as i32;
            let b = BoundingBox::from_origin(x + jx, y + jy, w, h)?;
            boxes[i] = canvas.clamp(&b)?;
            x += w + gap;
        }
    }
    let entries = keywords
        .iter()
        .zip(boxes)
        .map(|(k, bbox)| LayoutEntry {
            word: k.as_ref().to_owned(),
            bbox,
        })
        .collect();
    Ok(Layout::new(canvas, entries)?)
}

/// An OCR reading of an image and the scores it earns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub ocr: OcrResult,
    pub scores: TextScores,
}

/// Score an OCR reading against the layout's keywords, aligning detections
/// to keywords before comparing text.
pub fn snapshot(layout: &Layout, ocr: OcrResult) -> Snapshot {
    let truth = layout.words().collect::<Vec<_>>().join(" ");
    let pred = aligned_prediction(layout, &ocr).join(" ");
    Snapshot {
        scores: score_text(&truth, &pred),
        ocr,
    }
}

pub fn read_back(
    layout: &Layout,
    image: &GeneratedImage,
    ocr: &mut dyn OcrBackend,
    round: usize,
) -> Result<Snapshot, PipelineError> {
    let result = ocr
        .recognize(image)
        .map_err(|source| PipelineError::Backend { round, source })?;
    Ok(snapshot(layout, result))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    /// The repainted image, or the input image when nothing was flagged.
    pub image: GeneratedImage,
    pub flagged: Vec<Flagged>,
    pub backend_invoked: bool,
    pub before: Snapshot,
    pub after: Snapshot,
    /// The repaint condition; `None` when nothing was flagged.
    pub correction_glyph: Option<GlyphImage>,
}

/// Build the layout whose flagged keywords sit in their repaint regions.
fn correction_layout(layout: &Layout, flagged: &[Flagged], source: MaskSource) -> Layout {
    let canvas = layout.canvas();
    let mut out = layout.clone();
    for f in flagged {
        let region = match source {
            MaskSource::Detected => f.region.intersection(&canvas.bounds()),
            MaskSource::Layout => None,
        }
        .unwrap_or(layout.entries()[f.index].bbox);
        out.set_box_unchecked(f.index, region);
    }
    out
}

/// One OCR-check-and-repaint round over `image`.
#[allow(clippy::too_many_arguments)]
pub fn correction_round(
    prompt: &str,
    layout: &Layout,
    image: &GeneratedImage,
    backend: &mut dyn GeneratorBackend,
    ocr: &mut dyn OcrBackend,
    font: &FontSpec,
    mask_source: MaskSource,
    round: usize,
) -> Result<RoundOutcome, PipelineError> {
    let before = read_back(layout, image, ocr, round)?;
    let flagged = detect_misspellings(layout, &before.ocr);
    if flagged.is_empty() {
        return Ok(RoundOutcome {
            image: image.clone(),
            flagged,
            backend_invoked: false,
            after: before.clone(),
            before,
            correction_glyph: None,
        });
    }
    let corr_layout = correction_layout(layout, &flagged, mask_source);
    let indices: BTreeSet<usize> = flagged.iter().map(|f| f.index).collect();
    let glyph = glyph::render_correction(&corr_layout, &indices, font).expect("flagged indices come from the layout");
    let targets: Vec<Target> = flagged
        .iter()
        .map(|f| Target {
            index: f.index,
            region: corr_layout.entries()[f.index].bbox,
        })
        .collect();
    let repainted = backend
        .generate(&GenerateRequest {
            prompt,
            glyph: &glyph,
            prior: Some(image),
            targets: &targets,
        })
        .map_err(|source| PipelineError::Backend { round, source })?;
    let after = read_back(layout, &repainted, ocr, round)?;
    Ok(RoundOutcome {
        image: repainted,
        flagged,
        backend_invoked: true,
        before,
        after,
        correction_glyph: Some(glyph),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub flagged: Vec<Flagged>,
    pub backend_invoked: bool,
    pub word_f1_before: f64,
    pub word_f1_after: f64,
    pub accepted: bool,
    /// Word F1 of the image kept after this round.
    pub retained_word_f1: f64,
    pub scores_after: TextScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutSummary {
    pub overlap_area: i64,
    pub overlap_energy: f64,
    pub iou: f64,
}

impl LayoutSummary {
    pub fn of(layout: &Layout) -> Self {
        Self {
            overlap_area: geometry::total_overlap_area(layout),
            overlap_energy: geometry::weighted_overlap_energy(layout),
            iou: geometry::layout_iou(layout),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub initial_layout: Layout,
    pub layout: Layout,
    pub layout_before: LayoutSummary,
    pub layout_after: LayoutSummary,
    pub anneal_steps: usize,
    pub glyph: GlyphImage,
    pub initial_image: GeneratedImage,
    pub image: GeneratedImage,
    /// Scores of the first generation, before any repaint.
    pub initial_scores: TextScores,
    pub final_snapshot: Snapshot,
    pub rounds: Vec<RoundTrace>,
    /// Keywords whose boxes were too small to draw.
    pub unrenderable: Vec<usize>,
}

impl PipelineOutput {
    /// Word F1 of the retained image: first generation, then after each round.
    pub fn word_f1_history(&self) -> Vec<f64> {
        std::iter::once(self.initial_scores.word.f1)
            .chain(self.rounds.iter().map(|r| r.retained_word_f1))
            .collect()
    }

    pub fn record_metrics(&self, id: impl Into<String>) -> RecordMetrics {
        RecordMetrics {
            id: id.into(),
            keyword_count: self.layout.len(),
            scores: self.final_snapshot.scores,
            overlap_area: Some(self.layout_after.overlap_area as f64),
            overlap_energy: Some(self.layout_after.overlap_energy),
            iou: Some(self.layout_after.iou),
        }
    }
}

/// The full loop for one prompt. When `layout` is `None` a
/// [`rough_layout`] of `keywords` is used as the starting point.
pub fn run(
    prompt: &str,
    keywords: &[String],
    layout: Option<Layout>,
    config: &PipelineConfig,
    backend: &mut dyn GeneratorBackend,
    ocr: &mut dyn OcrBackend,
) -> Result<PipelineOutput, PipelineError> {
    config.validate()?;
    let initial_layout = match layout {
        Some(l) => l,
        None => rough_layout(keywords, config.canvas, &config.font, config.layout_jitter, config.seed)?,
    };
    if initial_layout.is_empty() {
        return Err(PipelineError::NoKeywords);
    }
    let (layout, anneal_trace) = annealer::optimize(&initial_layout, &config.anneal);
    let glyph = glyph::render(&layout, &config.font);
    let targets: Vec<Target> = glyph
        .words
        .iter()
        .map(|w| Target {
            index: w.index,
            region: w.layout_box,
        })
        .collect();
    let initial_image = backend
        .generate(&GenerateRequest {
            prompt,
            glyph: &glyph,
            prior: None,
            targets: &targets,
        })
        .map_err(PipelineError::InitialGeneration)?;
    let initial = read_back(&layout, &initial_image, ocr, 0)?;

    let mut current = initial_image.clone();
    let mut retained = initial.clone();
    let mut rounds = Vec::with_capacity(config.iterations);
    for round in 1..=config.iterations {
        let outcome = correction_round(
            prompt,
            &layout,
            &current,
            backend,
            ocr,
            &config.font,
            config.mask_source,
            round,
        )?;
        let accepted = outcome.backend_invoked
            && (!config.accept_if_better || outcome.after.scores.word.f1 >= retained.scores.word.f1);
        if accepted {
            current = outcome.image;
            retained = outcome.after.clone();
        }
        rounds.push(RoundTrace {
            round,
            flagged: outcome.flagged,
            backend_invoked: outcome.backend_invoked,
            word_f1_before: outcome.before.scores.word.f1,
            word_f1_after: outcome.after.scores.word.f1,
            accepted,
            retained_word_f1: retained.scores.word.f1,
            scores_after: outcome.after.scores,
        });
    }

    Ok(PipelineOutput {
        layout_before: LayoutSummary::of(&initial_layout),
        layout_after: LayoutSummary::of(&layout),
        anneal_steps: anneal_trace.steps.len(),
        initial_layout,
        unrenderable: glyph.unrenderable.clone(),
        glyph,
        initial_image,
        image: current,
        initial_scores: initial.scores,
        final_snapshot: retained,
        rounds,
        layout,
    })
}
