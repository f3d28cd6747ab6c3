//! Axis-aligned keyword rectangles on a pixel canvas, and the overlap
//! measures computed over them.
//!
//! Coordinates are integers on the pixel grid. A box covers the half-open
//! ranges `x0..x1` and `y0..y1`, so its area is exactly the number of pixels
//! it covers and every measure here can be checked against rasterization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("degenerate box ({x0},{y0},{x1},{y1}): need x0 < x1 and y0 < y1")]
    Degenerate { x0: i32, y0: i32, x1: i32, y1: i32 },
    #[error("box of size {width}x{height} cannot fit a {canvas_width}x{canvas_height} canvas")]
    DoesNotFit {
        width: i32,
        height: i32,
        canvas_width: u32,
        canvas_height: u32,
    },
    #[error("canvas must have positive dimensions, got {0}x{1}")]
    EmptyCanvas(u32, u32),
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("layout document, line {line} column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("layout document, box {index} ({word:?}): {source}")]
    InvalidBox {
        index: usize,
        word: String,
        #[source]
        source: GeometryError,
    },
    #[error("layout document, box {index} ({word:?}) lies outside the {canvas_width}x{canvas_height} canvas")]
    OutOfCanvas {
        index: usize,
        word: String,
        canvas_width: u32,
        canvas_height: u32,
    },
    #[error("layout document: {0}")]
    Canvas(GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An axis-aligned rectangle covering `x0..x1` by `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl BoundingBox {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Result<Self, GeometryError> {
        if x0 < x1 && y0 < y1 {
            Ok(Self { x0, y0, x1, y1 })
        } else {
            Err(GeometryError::Degenerate { x0, y0, x1, y1 })
        }
    }

    /// Box with its top-left corner at `(x, y)`.
    pub fn from_origin(x: i32, y: i32, width: i32, height: i32) -> Result<Self, GeometryError> {
        Self::new(x, y, x + width, y + height)
    }

    pub fn is_valid(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }

    #[inline]
    pub fn width(&self) -> i32 {
        self.x1 - self.x0
    }

    #[inline]
    pub fn height(&self) -> i32 {
        self.y1 - self.y0
    }

    #[inline]
    pub fn area(&self) -> i64 {
        i64::from(self.width()) * i64::from(self.height())
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.x0) + f64::from(self.x1)) / 2.0,
            (f64::from(self.y0) + f64::from(self.y1)) / 2.0,
        )
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 < x1 && y0 < y1).then_some(BoundingBox { x0, y0, x1, y1 })
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }

    pub fn contains_point(&self, x: i32, y: i32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    #[must_use]
    pub fn translate(&self, dx: i32, dy: i32) -> BoundingBox {
        BoundingBox {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }
}

/// Pixel dimensions of the drawing surface a layout lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyCanvas(width, height));
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> i64 {
        i64::from(self.width) * i64::from(self.height)
    }

    pub fn bounds(&self) -> BoundingBox {
        BoundingBox {
            x0: 0,
            y0: 0,
            x1: self.width as i32,
            y1: self.height as i32,
        }
    }

    pub fn contains(&self, b: &BoundingBox) -> bool {
        self.bounds().contains(b)
    }

    /// Translate `b` by the smallest vector that places it inside the canvas.
    /// Dimensions never change.
    pub fn clamp(&self, b: &BoundingBox) -> Result<BoundingBox, GeometryError> {
        if !b.is_valid() {
            return Err(GeometryError::Degenerate {
                x0: b.x0,
                y0: b.y0,
                x1: b.x1,
                y1: b.y1,
            });
        }
        let (cw, ch) = (self.width as i64, self.height as i64);
        if i64::from(b.width()) > cw || i64::from(b.height()) > ch {
            return Err(GeometryError::DoesNotFit {
                width: b.width(),
                height: b.height(),
                canvas_width: self.width,
                canvas_height: self.height,
            });
        }
        let shift = |lo: i32, hi: i32, limit: i64| -> i32 {
            if lo < 0 {
                -lo
            } else if i64::from(hi) > limit {
                (limit - i64::from(hi)) as i32
            } else {
                0
            }
        };
        Ok(b.translate(shift(b.x0, b.x1, cw), shift(b.y0, b.y1, ch)))
    }
}

/// One keyword and the box it is drawn in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutEntry {
    pub word: String,
    pub bbox: BoundingBox,
}

/// Keyword boxes on a canvas, in prompt order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    canvas: Canvas,
    entries: Vec<LayoutEntry>,
}

impl Layout {
    /// Builds a layout, rejecting degenerate boxes and boxes outside the canvas.
    pub fn new(canvas: Canvas, entries: Vec<LayoutEntry>) -> Result<Self, LayoutError> {
        for (index, e) in entries.iter().enumerate() {
            if !e.bbox.is_valid() {
                let b = e.bbox;
                return Err(LayoutError::InvalidBox {
                    index,
                    word: e.word.clone(),
                    source: GeometryError::Degenerate {
                        x0: b.x0,
                        y0: b.y0,
                        x1: b.x1,
                        y1: b.y1,
                    },
                });
            }
            if !canvas.contains(&e.bbox) {
                return Err(LayoutError::OutOfCanvas {
                    index,
                    word: e.word.clone(),
                    canvas_width: canvas.width,
                    canvas_height: canvas.height,
                });
            }
        }
        Ok(Self { canvas, entries })
    }

    pub fn empty(canvas: Canvas) -> Self {
        Self {
            canvas,
            entries: Vec::new(),
        }
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn boxes(&self) -> impl Iterator<Item = &BoundingBox> + '_ {
        self.entries.iter().map(|e| &e.bbox)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|e| e.word.as_str())
    }

    /// Clamp `b` into this layout's canvas.
    pub fn clamp_to_canvas(&self, b: &BoundingBox) -> Result<BoundingBox, GeometryError> {
        self.canvas.clamp(b)
    }

    /// Replace the box of entry `index`. The new box is clamped into the canvas.
    pub fn with_box(&self, index: usize, bbox: BoundingBox) -> Result<Layout, GeometryError> {
        let clamped = self.canvas.clamp(&bbox)?;
        let mut out = self.clone();
        out.entries[index].bbox = clamped;
        Ok(out)
    }

    pub(crate) fn set_box_unchecked(&mut self, index: usize, bbox: BoundingBox) {
        debug_assert!(self.canvas.contains(&bbox));
        self.entries[index].bbox = bbox;
    }

    pub fn from_json(text: &str) -> Result<Layout, LayoutError> {
        let doc: LayoutDocument = serde_json::from_str(text).map_err(|e| LayoutError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        doc.try_into()
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Layout, LayoutError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LayoutDocument::from(self)).expect("layout documents always serialize")
    }
}

/// Interchange form of a [`Layout`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutDocument {
    pub canvas_width: u32,
    pub canvas_height: u32,
    pub boxes: Vec<BoxDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDocument {
    pub word: String,
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl From<&Layout> for LayoutDocument {
    fn from(layout: &Layout) -> Self {
        LayoutDocument {
            canvas_width: layout.canvas.width,
            canvas_height: layout.canvas.height,
            boxes: layout
                .entries
                .iter()
                .map(|e| BoxDocument {
                    word: e.word.clone(),
                    x0: e.bbox.x0,
                    y0: e.bbox.y0,
                    x1: e.bbox.x1,
                    y1: e.bbox.y1,
                })
                .collect(),
        }
    }
}

impl TryFrom<LayoutDocument> for Layout {
    type Error = LayoutError;

    fn try_from(doc: LayoutDocument) -> Result<Self, Self::Error> {
        let canvas = Canvas::new(doc.canvas_width, doc.canvas_height).map_err(LayoutError::Canvas)?;
        let entries = doc
            .boxes
            .into_iter()
            .map(|b| LayoutEntry {
                word: b.word,
                bbox: BoundingBox {
                    x0: b.x0,
                    y0: b.y0,
                    x1: b.x1,
                    y1: b.y1,
                },
            })
            .collect();
        Layout::new(canvas, entries)
    }
}

/// Area of `a ∩ b`; zero when they are disjoint or only touch.
pub fn pair_overlap_area(a: &BoundingBox, b: &BoundingBox) -> i64 {
    a.intersection(b).map_or(0, |i| i.area())
}

/// Sum of intersection areas over all unordered pairs of boxes.
pub fn total_overlap_area(layout: &Layout) -> i64 {
    pairwise(layout).map(|(a, b)| pair_overlap_area(a, b)).sum()
}

/// Annealing energy: every pair's overlap weighted by the pair's combined
/// area, normalized by canvas area, so larger boxes push apart harder.
pub fn weighted_overlap_energy(layout: &Layout) -> f64 {
    let canvas_area = layout.canvas.area() as f64;
    pairwise(layout)
        .map(|(a, b)| {
            let overlap = pair_overlap_area(a, b);
            if overlap == 0 {
                0.0
            } else {
                overlap as f64 * (a.area() + b.area()) as f64 / canvas_area
            }
        })
        .sum()
}

/// Area covered by at least one box.
///
/// Coordinate-compressed sweep over x: each strip between consecutive
/// distinct x edges sums the merged y-intervals of the boxes spanning it.
pub fn union_area<'a>(boxes: impl IntoIterator<Item = &'a BoundingBox>) -> i64 {
    let boxes: Vec<&BoundingBox> = boxes.into_iter().collect();
    let mut xs: Vec<i32> = boxes.iter().flat_map(|b| [b.x0, b.x1]).collect();
    xs.sort_unstable();
    xs.dedup();

    let mut total = 0i64;
    let mut spans: Vec<(i32, i32)> = Vec::with_capacity(boxes.len());
    for strip in xs.windows(2) {
        let (left, right) = (strip[0], strip[1]);
        spans.clear();
        spans.extend(
            boxes
                .iter()
                .filter(|b| b.x0 <= left && b.x1 >= right)
                .map(|b| (b.y0, b.y1)),
        );
        if spans.is_empty() {
            continue;
        }
        spans.sort_unstable();
        let mut covered = 0i64;
        let (mut lo, mut hi) = spans[0];
        for &(s, e) in &spans[1..] {
            if s > hi {
                covered += i64::from(hi - lo);
                lo = s;
                hi = e;
            } else {
                hi = hi.max(e);
            }
        }
        covered += i64::from(hi - lo);
        total += covered * i64::from(right - left);
    }
    total
}

/// Summed pairwise intersections over the union of all boxes.
///
/// Equals the usual IoU for two boxes. With three or more boxes stacked on
/// the same pixels the ratio can exceed 1. An empty layout scores 0.
pub fn layout_iou(layout: &Layout) -> f64 {
    if layout.is_empty() {
        return 0.0;
    }
    let union = union_area(layout.boxes());
    if union == 0 {
        return 0.0;
    }
    total_overlap_area(layout) as f64 / union as f64
}

fn pairwise(layout: &Layout) -> impl Iterator<Item = (&BoundingBox, &BoundingBox)> + '_ {
    let e = &layout.entries;
    (0..e.len()).flat_map(move |i| (i + 1..e.len()).map(move |j| (&e[i].bbox, &e[j].bbox)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x0: i32, y0: i32, x1: i32, y1: i32) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn layout(w: u32, h: u32, boxes: &[BoundingBox]) -> Layout {
        let entries = boxes
            .iter()
            .enumerate()
            .map(|(i, b)| LayoutEntry {
                word: format!("w{i}"),
                bbox: *b,
            })
            .collect();
        Layout::new(Canvas::new(w, h).unwrap(), entries).unwrap()
    }

    #[test]
    fn pair_overlap_examples() {
        assert_eq!(pair_overlap_area(&bb(0, 0, 10, 10), &bb(20, 20, 30, 30)), 0);
        assert_eq!(pair_overlap_area(&bb(0, 0, 10, 10), &bb(0, 0, 10, 10)), 100);
        assert_eq!(pair_overlap_area(&bb(0, 0, 10, 10), &bb(5, 5, 15, 15)), 25);
        // touching edges share no pixels
        assert_eq!(pair_overlap_area(&bb(0, 0, 10, 10), &bb(10, 0, 20, 10)), 0);
    }

    #[test]
    fn total_overlap_examples() {
        assert_eq!(total_overlap_area(&layout(100, 100, &[bb(0, 0, 10, 10)])), 0);
        let disjoint = [bb(0, 0, 10, 10), bb(20, 0, 30, 10), bb(40, 40, 50, 50)];
        assert_eq!(total_overlap_area(&layout(100, 100, &disjoint)), 0);
        let stacked = [bb(0, 0, 10, 10), bb(0, 0, 10, 10), bb(50, 50, 60, 60)];
        assert_eq!(total_overlap_area(&layout(100, 100, &stacked)), 100);
    }

    #[test]
    fn weighted_energy_examples() {
        let disjoint = [bb(0, 0, 10, 10), bb(20, 0, 30, 10)];
        assert_eq!(weighted_overlap_energy(&layout(100, 100, &disjoint)), 0.0);
        let same = [bb(0, 0, 10, 10), bb(0, 0, 10, 10)];
        assert_eq!(weighted_overlap_energy(&layout(100, 100, &same)), 2.0);
    }

    #[test]
    fn iou_examples() {
        let same = [bb(0, 0, 10, 10), bb(0, 0, 10, 10)];
        assert_eq!(layout_iou(&layout(100, 100, &same)), 1.0);
        let disjoint = [bb(0, 0, 10, 10), bb(20, 0, 30, 10)];
        assert_eq!(layout_iou(&layout(100, 100, &disjoint)), 0.0);
        let half = [bb(0, 0, 10, 10), bb(5, 0, 15, 10)];
        assert!((layout_iou(&layout(100, 100, &half)) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(layout_iou(&Layout::empty(Canvas::new(10, 10).unwrap())), 0.0);
    }

    #[test]
    fn clamp_examples() {
        let c = Canvas::new(100, 100).unwrap();
        assert_eq!(c.clamp(&bb(10, 10, 20, 20)).unwrap(), bb(10, 10, 20, 20));
        assert_eq!(c.clamp(&bb(-5, 0, 5, 10)).unwrap(), bb(0, 0, 10, 10));
        assert_eq!(c.clamp(&bb(95, 95, 105, 105)).unwrap(), bb(90, 90, 100, 100));
        assert!(matches!(
            c.clamp(&bb(0, 0, 101, 10)),
            Err(GeometryError::DoesNotFit { .. })
        ));
    }

    #[test]
    fn degenerate_boxes_rejected() {
        assert!(BoundingBox::new(5, 0, 5, 10).is_err());
        assert!(BoundingBox::new(0, 3, 10, 1).is_err());
    }

    #[test]
    fn layout_json_round_trip() {
        let l = layout(64, 32, &[bb(0, 0, 10, 10), bb(4, 4, 30, 20)]);
        assert_eq!(Layout::from_json(&l.to_json()).unwrap(), l);
    }

    #[test]
    fn layout_json_errors_carry_position() {
        let err = Layout::from_json("{\n  \"canvas_width\": 10,\n  \"canvas_height\": oops\n}").unwrap_err();
        match err {
            LayoutError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let outside = r#"{"canvas_width":10,"canvas_height":10,"boxes":[{"word":"a","x0":5,"y0":0,"x1":15,"y1":5}]}"#;
        assert!(matches!(
            Layout::from_json(outside),
            Err(LayoutError::OutOfCanvas { index: 0, .. })
        ));
        let flat = r#"{"canvas_width":10,"canvas_height":10,"boxes":[{"word":"a","x0":5,"y0":0,"x1":5,"y1":5}]}"#;
        assert!(matches!(
            Layout::from_json(flat),
            Err(LayoutError::InvalidBox { index: 0, .. })
        ));
    }
}
