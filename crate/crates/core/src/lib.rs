//! Training-free tooling for glyph-conditioned text rendering: keyword
//! layout de-overlap by simulated annealing, glyph rasterization, an
//! OCR-driven repaint loop over pluggable backends, benchmark generation and
//! text-accuracy metrics.

pub mod annealer;
pub mod benchgen;
pub mod geometry;
pub mod glyph;
pub mod pipeline;
pub mod seed;
pub mod textmetrics;
