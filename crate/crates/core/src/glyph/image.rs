//! 8-bit grayscale rasters and their on-disk encodings.
//!
//! Binary PGM (P5, maxval 255) is the canonical interchange format. PNG is
//! written for viewing only.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::geometry::BoundingBox;

pub const INK: u8 = 0;
pub const BACKGROUND: u8 = 255;

/// Largest side accepted when decoding, to bound allocations on bad input.
pub const MAX_SIDE: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("PGM: {0}")]
    Pgm(String),
    #[error("PNG: {0}")]
    Png(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// A blank whiteboard.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![BACKGROUND; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, pixels: Vec<u8>) -> Option<Self> {
        (pixels.len() == width * height).then_some(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// `b` cut down to the image bounds, as pixel ranges.
    fn span(&self, b: &BoundingBox) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let x0 = b.x0.max(0) as usize;
        let y0 = b.y0.max(0) as usize;
        let x1 = (b.x1.max(0) as usize).min(self.width);
        let y1 = (b.y1.max(0) as usize).min(self.height);
        (x0 < x1 && y0 < y1).then_some((x0..x1, y0..y1))
    }

    pub fn fill(&mut self, b: &BoundingBox, v: u8) {
        if let Some((xs, ys)) = self.span(b) {
            for y in ys {
                self.pixels[y * self.width + xs.start..y * self.width + xs.end].fill(v);
            }
        }
    }

    /// Copy the pixels under `b` from `src`, which must have the same size.
    pub fn copy_region(&mut self, src: &GrayImage, b: &BoundingBox) {
        assert_eq!((self.width, self.height), (src.width, src.height));
        if let Some((xs, ys)) = self.span(b) {
            for y in ys {
                let row = y * self.width;
                self.pixels[row + xs.start..row + xs.end].copy_from_slice(&src.pixels[row + xs.start..row + xs.end]);
            }
        }
    }

    /// 3x3 mean filter restricted to `b`; samples outside `b` are ignored.
    pub fn blur_region(&mut self, b: &BoundingBox) {
        let Some((xs, ys)) = self.span(b) else { return };
        let src = self.clone();
        for y in ys.clone() {
            for x in xs.clone() {
                let (mut sum, mut n) = (0u32, 0u32);
                for ny in y.saturating_sub(1)..=(y + 1).min(ys.end - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(xs.end - 1) {
                        sum += u32::from(src.get(nx, ny));
                        n += 1;
                    }
                }
                self.set(x, y, (sum / n) as u8);
            }
        }
    }

    pub fn is_blank_outside(&self, regions: &[BoundingBox]) -> bool {
        (0..self.height).all(|y| {
            (0..self.width)
                .all(|x| self.get(x, y) == BACKGROUND || regions.iter().any(|r| r.contains_point(x as i32, y as i32)))
        })
    }

    /// Binary mask: ink (0) where the pixel is darker than `threshold`.
    pub fn threshold(&self, threshold: u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .pixels
                .iter()
                .map(|&p| if p < threshold { INK } else { BACKGROUND })
                .collect(),
        }
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Decode a binary PGM with maxval 255. Header comments are allowed.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, ImageError> {
        let bad = |m: &str| ImageError::Pgm(m.to_owned());
        let mut pos = 0;
        let token = |pos: &mut usize| -> Result<&[u8], ImageError> {
            loop {
                match bytes.get(*pos) {
                    Some(b'#') => {
                        while bytes.get(*pos).is_some_and(|&c| c != b'\n') {
                            *pos += 1;
                        }
                    }
                    Some(c) if c.is_ascii_whitespace() => *pos += 1,
                    Some(_) => break,
                    None => return Err(bad("truncated header")),
                }
            }
            let start = *pos;
            while bytes.get(*pos).is_some_and(|c| !c.is_ascii_whitespace()) {
                *pos += 1;
            }
            Ok(&bytes[start..*pos])
        };
        let number = |t: &[u8]| -> Result<usize, ImageError> {
            std::str::from_utf8(t)
                .ok()
                .filter(|s| s.bytes().all(|c| c.is_ascii_digit()))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("malformed header number"))
        };

        if token(&mut pos)? != b"P5" {
            return Err(bad("not a binary PGM (expected P5)"));
        }
        let width = number(token(&mut pos)?)?;
        let height = number(token(&mut pos)?)?;
        let maxval = number(token(&mut pos)?)?;
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(bad("image dimensions out of range"));
        }
        // exactly one whitespace byte separates the header from the raster
        if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
            return Err(bad("truncated header"));
        }
        pos += 1;
        let raster = &bytes[pos..];
        if raster.len() != width * height {
            return Err(bad(&format!(
                "raster holds {} bytes, expected {}",
                raster.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: raster.to_vec(),
        })
    }

    pub fn read_pgm(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        Self::from_pgm(&std::fs::read(path)?)
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }

    pub fn write_png<W: Write>(&self, out: W) -> Result<(), ImageError> {
        let mut enc = png::Encoder::new(out, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(&self.pixels)?;
        w.finish()?;
        Ok(())
    }
}
