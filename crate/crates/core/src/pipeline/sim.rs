//! Deterministic stand-ins for the image generator and the OCR engine.
//!
//! The simulated generator draws keywords with the block font and injects
//! the three typical failure modes of glyph-conditioned diffusion: dropped
//! words, misspelled words and blurred words. It records what it drew in a
//! [`Manifest`] that [`SimOcr`] reads back instead of recognizing pixels.

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glyph::{self, FontSpec, GrayImage};
use crate::seed::{self, Rng};

use super::types::{
    BackendError, GenerateRequest, GeneratedImage, GeneratorBackend, Manifest, ManifestEntry, OcrBackend, OcrResult,
    OcrWord,
};

#[derive(Debug, Error, PartialEq)]
#[error("{name} must lie in [0, 1], got {value}")]
pub struct ProbabilityError {
    pub name: &'static str,
    pub value: f64,
}

fn check(name: &'static str, value: f64) -> Result<(), ProbabilityError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ProbabilityError { name, value })
    }
}

/// Per-word failure probabilities of the simulated generator.
///
/// Each painted word is first dropped with `p_missing_word`; a surviving
/// word is misspelled with `p_misspell` and, independently, blurred with
/// `p_blur`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p_missing_word: f64,
    pub p_misspell: f64,
    pub p_blur: f64,
    /// Character edits applied to a misspelled word.
    pub edits_per_misspelling: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p_missing_word: 0.1,
            p_misspell: 0.3,
            p_blur: 0.1,
            edits_per_misspelling: 1,
        }
    }
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        p_missing_word: 0.0,
        p_misspell: 0.0,
        p_blur: 0.0,
        edits_per_misspelling: 1,
    };

    pub fn validate(&self) -> Result<(), ProbabilityError> {
        check("p_missing_word", self.p_missing_word)?;
        check("p_misspell", self.p_misspell)?;
        check("p_blur", self.p_blur)
    }
}

const LETTERS: &[u8; 26] = b"abcdefghijklmnopqrstuvwxyz";

fn letter_except(rng: &mut Rng, not: char) -> char {
    let not = not.to_ascii_lowercase();
    loop {
        let c = LETTERS[rng.gen_range(0..26)] as char;
        if c != not {
            return c;
        }
    }
}

fn cased_like(template: char, c: char) -> char {
    if template.is_lowercase() {
        c
    } else {
        c.to_ascii_uppercase()
    }
}

/// Substitute one character with a different letter.
pub fn substitute_one(text: &str, rng: &mut Rng) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return (LETTERS[rng.gen_range(0..26)] as char).to_string();
    }
    let i = rng.gen_range(0..chars.len());
    chars[i] = cased_like(chars[i], letter_except(rng, chars[i]));
    chars.into_iter().collect()
}

/// One random edit: substitution, insertion or deletion (deletion only when
/// at least two characters remain). The result always differs from `text`.
pub fn char_edit(text: &str, rng: &mut Rng) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let kinds = if chars.len() >= 2 { 3 } else { 2 };
    match rng.gen_range(0..kinds) {
        0 => substitute_one(text, rng),
        1 => {
            let at = rng.gen_range(0..=chars.len());
            let like = chars.get(at).or(chars.last()).copied().unwrap_or('a');
            chars.insert(at, cased_like(like, LETTERS[rng.gen_range(0..26)] as char));
            chars.into_iter().collect()
        }
        _ => {
            chars.remove(rng.gen_range(0..chars.len()));
            chars.into_iter().collect()
        }
    }
}

/// Simulated image generator.
///
/// Without a prior it paints every glyph word on a blank canvas. With a
/// prior it starts from the prior's pixels, clears each target region and
/// repaints only the targeted words; everything else is left untouched.
pub struct SimGenerator {
    noise: NoiseModel,
    font: FontSpec,
    rng: Rng,
}

impl SimGenerator {
    pub fn new(noise: NoiseModel, font: FontSpec, seed: u64) -> Self {
        Self {
            noise,
            font,
            rng: seed::rng(seed),
        }
    }
}

impl GeneratorBackend for SimGenerator {
    fn generate(&mut self, request: &GenerateRequest<'_>) -> Result<GeneratedImage, BackendError> {
        let glyph = request.glyph;
        let (mut image, mut entries) = match request.prior {
            Some(prior) => {
                if (prior.image.width(), prior.image.height()) != (glyph.width(), glyph.height()) {
                    return Err(BackendError::Output("prior and glyph sizes differ".into()));
                }
                let manifest = prior.manifest.clone().unwrap_or_default();
                (prior.image.clone(), manifest.entries)
            }
            None => (GrayImage::new(glyph.width(), glyph.height()), Vec::new()),
        };
        for t in request.targets {
            image.fill(&t.region, glyph::BACKGROUND);
        }
        entries.retain(|e| !request.targets.iter().any(|t| t.index == e.index));

        for word in &glyph.words {
            let missing = self.rng.gen_bool(self.noise.p_missing_word);
            let misspell = self.rng.gen_bool(self.noise.p_misspell);
            let blurred = self.rng.gen_bool(self.noise.p_blur);
            if missing {
                continue;
            }
            let mut text = word.word.clone();
            if misspell {
                for _ in 0..self.noise.edits_per_misspelling.max(1) {
                    text = char_edit(&text, &mut self.rng);
                }
            }
            let Some(placement) = glyph::draw_text(&mut image, &text, &word.layout_box, &self.font) else {
                continue;
            };
            if blurred {
                image.blur_region(&placement.region);
            }
            entries.push(ManifestEntry {
                index: word.index,
                text,
                bbox: placement.region,
                blurred,
            });
        }
        entries.sort_by_key(|e| e.index);
        Ok(GeneratedImage {
            image,
            manifest: Some(Manifest { entries }),
        })
    }
}

/// Extra recognition errors layered on top of [`SimOcr`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OcrNoise {
    pub p_drop: f64,
    pub p_corrupt: f64,
}

pub const BLURRED_CONFIDENCE: f64 = 0.3;

/// Reads a simulated image's manifest back as OCR output. Blurred words come
/// back with one substituted character at confidence 0.3.
pub struct SimOcr {
    noise: OcrNoise,
    rng: Rng,
}

impl SimOcr {
    pub fn new(seed: u64) -> Self {
        Self::with_noise(OcrNoise::default(), seed)
    }

    pub fn with_noise(noise: OcrNoise, seed: u64) -> Self {
        Self {
            noise,
            rng: seed::rng(seed),
        }
    }
}

impl OcrBackend for SimOcr {
    fn recognize(&mut self, image: &GeneratedImage) -> Result<OcrResult, BackendError> {
        let manifest = image.manifest.as_ref().ok_or(BackendError::MissingManifest)?;
        let mut detected = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            let (mut word, mut confidence) = if e.blurred {
                (substitute_one(&e.text, &mut self.rng), BLURRED_CONFIDENCE)
            } else {
                (e.text.clone(), 1.0)
            };
            if self.noise.p_drop > 0.0 && self.rng.gen_bool(self.noise.p_drop.clamp(0.0, 1.0)) {
                continue;
            }
            if self.noise.p_corrupt > 0.0 && self.rng.gen_bool(self.noise.p_corrupt.clamp(0.0, 1.0)) {
                word = substitute_one(&word, &mut self.rng);
                confidence = confidence.min(0.5);
            }
            detected.push(OcrWord {
                word,
                bbox: e.bbox,
                confidence,
            });
        }
        Ok(OcrResult { detected })
    }
}
