use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;
use crate::glyph::{GlyphImage, GrayImage, ImageError};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("image has no text manifest; simulated OCR only reads simulated images (use the external-command OCR adapter for real images)")]
    MissingManifest,
    #[error("failed to start {program}: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{program} exited with {status}: {stderr}")]
    Failed {
        program: String,
        status: String,
        stderr: String,
    },
    #[error("backend output: {0}")]
    Output(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum OcrParseError {
    #[error("OCR result line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A word the OCR engine read, where it read it, and how sure it was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrWord {
    pub word: String,
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OcrResult {
    pub detected: Vec<OcrWord>,
}

impl OcrResult {
    /// One detection per line: `{"word", "x0", "y0", "x1", "y1", "confidence"}`.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, OcrParseError> {
        let mut detected = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| OcrParseError::Line { line: i + 1, message };
            let w: OcrWord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            if !w.bbox.is_valid() {
                return Err(err("degenerate box".into()));
            }
            if !(0.0..=1.0).contains(&w.confidence) {
                return Err(err(format!("confidence {} outside [0, 1]", w.confidence)));
            }
            detected.push(w);
        }
        Ok(OcrResult { detected })
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, OcrParseError> {
        Self::read_jsonl(text.as_bytes())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for w in &self.detected {
            serde_json::to_writer(&mut out, w)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Clip every box to `width` x `height` and drop the ones left empty.
    pub fn clipped_to(&self, width: usize, height: usize) -> OcrResult {
        let frame = BoundingBox {
            x0: 0,
            y0: 0,
            x1: width as i32,
            y1: height as i32,
        };
        OcrResult {
            detected: self
                .detected
                .iter()
                .filter_map(|w| w.bbox.intersection(&frame).map(|bbox| OcrWord { bbox, ..w.clone() }))
                .collect(),
        }
    }
}

/// What a simulated generator actually drew for one keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub text: String,
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub blurred: bool,
}

/// Sidecar listing the text drawn into a simulated image.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

/// A generator's output image, with its manifest when the generator is
/// simulated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedImage {
    pub image: GrayImage,
    pub manifest: Option<Manifest>,
}

/// A keyword slot the generator is asked to (re)paint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub index: usize,
    #[serde(flatten)]
    pub region: BoundingBox,
}

pub struct GenerateRequest<'a> {
    pub prompt: &'a str,
    /// Condition image; for repaint rounds only the targeted words are drawn.
    pub glyph: &'a GlyphImage,
    /// Image being repainted. `None` for the first generation.
    pub prior: Option<&'a GeneratedImage>,
    /// Regions to repaint. Pixels outside them must keep the prior's values.
    pub targets: &'a [Target],
}

pub trait GeneratorBackend {
    fn generate(&mut self, request: &GenerateRequest<'_>) -> Result<GeneratedImage, BackendError>;
}

pub trait OcrBackend {
    fn recognize(&mut self, image: &GeneratedImage) -> Result<OcrResult, BackendError>;
}

impl<T: GeneratorBackend + ?Sized> GeneratorBackend for Box<T> {
    fn generate(&mut self, request: &GenerateRequest<'_>) -> Result<GeneratedImage, BackendError> {
        (**self).generate(request)
    }
}

impl<T: OcrBackend + ?Sized> OcrBackend for Box<T> {
    fn recognize(&mut self, image: &GeneratedImage) -> Result<OcrResult, BackendError> {
        (**self).recognize(image)
    }
}
