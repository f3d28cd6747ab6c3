//! Rasterize keyword layouts into whiteboard glyph images.
//!
//! Each keyword is set in a row of monospace cells, scaled by the largest
//! integer factor that fits its box, and centered. A cell is the glyph plus
//! one blank column, so a word of `n` characters at scale `s` spans
//! `n · (glyph_width + 1) · s` by `glyph_height · s` pixels and its
//! character regions tile that span in equal widths.

mod font;
mod image;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, Canvas, Layout};

pub use font::{BitmapFont, FontError, FontSpec};
pub use image::{GrayImage, ImageError, BACKGROUND, INK, MAX_SIDE};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GlyphError {
    #[error("keyword index {index} out of range for a layout of {len} keywords")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Where a word lands inside its box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub scale: usize,
    pub region: BoundingBox,
    pub chars: Vec<BoundingBox>,
}

/// Largest-integer-scale, centered placement of `text` in `bbox`, or
/// `None` when not even a scale-1 rendering fits.
pub fn fit(text: &str, bbox: &BoundingBox, font: &FontSpec) -> Option<Placement> {
    let n = text.chars().count();
    if n == 0 {
        return None;
    }
    let cell_w = font.cell_width();
    let cell_h = font.glyph_height();
    let (bw, bh) = (bbox.width() as usize, bbox.height() as usize);
    let scale = (bw / (n * cell_w)).min(bh / cell_h);
    if scale == 0 {
        return None;
    }
    let word_w = n * cell_w * scale;
    let word_h = cell_h * scale;
    let ox = bbox.x0 + ((bw - word_w) / 2) as i32;
    let oy = bbox.y0 + ((bh - word_h) / 2) as i32;
    let step = (cell_w * scale) as i32;
    let chars = (0..n as i32)
        .map(|i| BoundingBox {
            x0: ox + i * step,
            y0: oy,
            x1: ox + (i + 1) * step,
            y1: oy + word_h as i32,
        })
        .collect();
    Some(Placement {
        scale,
        region: BoundingBox {
            x0: ox,
            y0: oy,
            x1: ox + word_w as i32,
            y1: oy + word_h as i32,
        },
        chars,
    })
}

/// Draw `text` into `bbox` on `image`. Returns `None` (and draws nothing)
/// when the text does not fit.
pub fn draw_text(image: &mut GrayImage, text: &str, bbox: &BoundingBox, font: &FontSpec) -> Option<Placement> {
    let placement = fit(text, bbox, font)?;
    let s = placement.scale as i32;
    for (c, cell) in text.chars().zip(&placement.chars) {
        for row in 0..font.glyph_height() {
            for col in 0..font.glyph_width() {
                if font.is_lit(c, col, row) {
                    let x = cell.x0 + col as i32 * s;
                    let y = cell.y0 + row as i32 * s;
                    image.fill(
                        &BoundingBox {
                            x0: x,
                            y0: y,
                            x1: x + s,
                            y1: y + s,
                        },
                        INK,
                    );
                }
            }
        }
    }
    Some(placement)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedWord {
    /// Position of the keyword in the layout.
    pub index: usize,
    pub word: String,
    pub region: BoundingBox,
    pub chars: Vec<BoundingBox>,
    /// The layout box the word was fitted into.
    pub layout_box: BoundingBox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphImage {
    pub image: GrayImage,
    pub words: Vec<RenderedWord>,
    /// Layout indices whose boxes were too small for the font.
    pub unrenderable: Vec<usize>,
}

impl GlyphImage {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    pub fn pixels(&self) -> &[u8] {
        self.image.pixels()
    }

    pub fn regions_document(&self) -> RegionsDocument {
        RegionsDocument {
            canvas_width: self.image.width() as u32,
            canvas_height: self.image.height() as u32,
            boxes: self
                .words
                .iter()
                .map(|w| RegionDocument {
                    index: w.index,
                    word: w.word.clone(),
                    x0: w.region.x0,
                    y0: w.region.y0,
                    x1: w.region.x1,
                    y1: w.region.y1,
                    char_regions: w.chars.clone(),
                })
                .collect(),
            unrenderable: self.unrenderable.clone(),
        }
    }
}

/// Sidecar describing rendered regions; mirrors the layout document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionsDocument {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub boxes: Vec<RegionDocument>,
    pub unrenderable: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDocument {
    pub index: usize,
    pub word: String,
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
    pub char_regions: Vec<BoundingBox>,
}

fn blank(canvas: Canvas) -> GrayImage {
    GrayImage::new(canvas.width as usize, canvas.height as usize)
}

fn render_selected(layout: &Layout, selected: impl Fn(usize) -> bool, font: &FontSpec) -> GlyphImage {
    let mut image = blank(layout.canvas());
    let mut words = Vec::new();
    let mut unrenderable = Vec::new();
    for (index, entry) in layout.entries().iter().enumerate().filter(|(i, _)| selected(*i)) {
        match draw_text(&mut image, &entry.word, &entry.bbox, font) {
            Some(p) => words.push(RenderedWord {
                index,
                word: entry.word.clone(),
                region: p.region,
                chars: p.chars,
                layout_box: entry.bbox,
            }),
            None => unrenderable.push(index),
        }
    }
    GlyphImage {
        image,
        words,
        unrenderable,
    }
}

/// Draw every keyword of `layout`.
pub fn render(layout: &Layout, font: &FontSpec) -> GlyphImage {
    render_selected(layout, |_| true, font)
}

/// Draw only the keywords in `indices`, leaving all other boxes blank.
/// This is the condition image for repainting misspelled words.
pub fn render_correction(
    layout: &Layout,
    indices: &BTreeSet<usize>,
    font: &FontSpec,
) -> Result<GlyphImage, GlyphError> {
    if let Some(&index) = indices.iter().find(|&&i| i >= layout.len()) {
        return Err(GlyphError::IndexOutOfRange {
            index,
            len: layout.len(),
        });
    }
    Ok(render_selected(layout, |i| indices.contains(&i), font))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LayoutEntry;

    type Corners = (i32, i32, i32, i32);

    fn layout(words: &[(&str, Corners)]) -> Layout {
        Layout::new(
            Canvas::new(200, 120).unwrap(),
            words
                .iter()
                .map(|(w, (x0, y0, x1, y1))| LayoutEntry {
                    word: (*w).into(),
                    bbox: BoundingBox::new(*x0, *y0, *x1, *y1).unwrap(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_layout_is_blank() {
        let g = render(&Layout::empty(Canvas::new(16, 8).unwrap()), &FontSpec::SyntheticBlock);
        assert!(g.words.is_empty());
        assert!(g.pixels().iter().all(|&p| p == BACKGROUND));
    }

    #[test]
    fn single_char_region_equals_word_region() {
        let g = render(&layout(&[("A", (0, 0, 100, 100))]), &FontSpec::SyntheticBlock);
        assert_eq!(g.words.len(), 1);
        assert_eq!(g.words[0].chars, vec![g.words[0].region]);
    }

    #[test]
    fn two_chars_tile_the_word() {
        // 2 cells of 6 columns: scale = min(100 / 12, 50 / 7) = 7,
        // word = 84x49 centered in 100x50 -> x offset 8, y offset 0
        let g = render(&layout(&[("AB", (0, 0, 100, 50))]), &FontSpec::SyntheticBlock);
        let w = &g.words[0];
        assert_eq!(w.region, BoundingBox::new(8, 0, 92, 49).unwrap());
        assert_eq!(
            w.chars,
            vec![
                BoundingBox::new(8, 0, 50, 49).unwrap(),
                BoundingBox::new(50, 0, 92, 49).unwrap()
            ]
        );
    }

    #[test]
    fn tiny_box_is_unrenderable() {
        let g = render(
            &layout(&[("WIDE", (0, 0, 20, 20)), ("ok", (30, 30, 60, 60))]),
            &FontSpec::SyntheticBlock,
        );
        assert_eq!(g.unrenderable, vec![0]);
        assert_eq!(g.words.len(), 1);
        let b = BoundingBox::new(0, 0, 20, 20).unwrap();
        assert!(
            (0..20).all(|y| (0..20).all(|x| g.image.get(x, y) == BACKGROUND || !b.contains_point(x as i32, y as i32)))
        );
    }

    #[test]
    fn correction_subsets() {
        let l = layout(&[
            ("ONE", (0, 0, 60, 30)),
            ("TWO", (70, 0, 130, 30)),
            ("SIX", (0, 40, 60, 70)),
        ]);
        let font = FontSpec::SyntheticBlock;
        let none = render_correction(&l, &BTreeSet::new(), &font).unwrap();
        assert!(none.pixels().iter().all(|&p| p == BACKGROUND));
        let all = render_correction(&l, &(0..3).collect(), &font).unwrap();
        assert_eq!(all, render(&l, &font));
        let first = render_correction(&l, &[0].into(), &font).unwrap();
        assert!(first.image.is_blank_outside(&[l.entries()[0].bbox]));
        assert!(first.pixels().contains(&INK));
        assert_eq!(
            render_correction(&l, &[3].into(), &font),
            Err(GlyphError::IndexOutOfRange { index: 3, len: 3 })
        );
    }

    #[test]
    fn regions_sidecar_lists_char_regions() {
        let g = render(&layout(&[("Hi", (0, 0, 60, 30))]), &FontSpec::SyntheticBlock);
        let doc = g.regions_document();
        assert_eq!(doc.boxes[0].char_regions.len(), 2);
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(serde_json::from_str::<RegionsDocument>(&json).unwrap(), doc);
    }
}
