//! Monospace bitmap faces.
//!
//! The built-in face is a 5x7 dot matrix. Lowercase letters use the
//! uppercase shapes and unmapped characters draw as a hollow box. A
//! [`BitmapFont`] can be loaded from a small text format:
//!
//! ```text
//! # comments start with '#'
//! size 3 3
//! char A
//! .#.
//! ###
//! #.#
//! char U+0020
//! ...
//! ...
//! ...
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FontError {
    #[error("font line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const BLOCK_WIDTH: usize = 5;
const BLOCK_HEIGHT: usize = 7;
const HOLLOW: [u8; 7] = [0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F];

fn block_rows(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        ' ' => [0; 7],
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        '!' => [0x04, 0x04, 0x04, 0x04, 0x04, 0x00, 0x04],
        '@' => [0x0E, 0x11, 0x01, 0x0D, 0x15, 0x15, 0x0E],
        '#' => [0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A],
        '$' => [0x04, 0x0F, 0x14, 0x0E, 0x05, 0x1E, 0x04],
        '%' => [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
        '^' => [0x04, 0x0A, 0x11, 0x00, 0x00, 0x00, 0x00],
        '&' => [0x0C, 0x12, 0x14, 0x08, 0x15, 0x12, 0x0D],
        '*' => [0x00, 0x04, 0x15, 0x0E, 0x15, 0x04, 0x00],
        '(' => [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
        ')' => [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '+' => [0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00],
        '=' => [0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        ',' => [0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08],
        '\'' => [0x0C, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00],
        '"' => [0x0A, 0x0A, 0x0A, 0x00, 0x00, 0x00, 0x00],
        '?' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        ';' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x04, 0x08],
        '/' => [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00],
        '_' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F],
        _ => HOLLOW,
    }
}

/// A monospace face loaded from a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitmapFont {
    width: usize,
    height: usize,
    glyphs: HashMap<char, Vec<Vec<bool>>>,
}

impl BitmapFont {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.glyphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FontError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, FontError> {
        let err = |line: usize, message: String| FontError::Parse { line, message };
        let raw: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .collect();
        let mut cursor = 0;
        // Outside glyph bodies, blank lines and '#' comments are skipped.
        // Rows inside a body are taken verbatim since they may begin with '#'.
        let next_directive = |cursor: &mut usize| -> Option<(usize, &str)> {
            while *cursor < raw.len() {
                let (n, l) = raw[*cursor];
                *cursor += 1;
                let t = l.trim();
                if !t.is_empty() && !t.starts_with('#') {
                    return Some((n, t));
                }
            }
            None
        };

        let (line_no, header) =
            next_directive(&mut cursor).ok_or_else(|| err(1, "missing `size W H` header".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("size") {
            return Err(err(line_no, "expected `size W H`".into()));
        }
        let dim = |p: Option<&str>| -> Result<usize, FontError> {
            let v: usize = p
                .ok_or_else(|| err(line_no, "expected `size W H`".into()))?
                .parse()
                .map_err(|e| err(line_no, format!("bad dimension: {e}")))?;
            if v == 0 || v > 64 {
                return Err(err(line_no, format!("dimension {v} outside 1..=64")));
            }
            Ok(v)
        };
        let width = dim(parts.next())?;
        let height = dim(parts.next())?;
        if parts.next().is_some() {
            return Err(err(line_no, "trailing tokens after `size W H`".into()));
        }

        let mut glyphs = HashMap::new();
        while let Some((line_no, line)) = next_directive(&mut cursor) {
            let spec = line
                .strip_prefix("char ")
                .ok_or_else(|| err(line_no, format!("expected `char X`, found {line:?}")))?
                .trim();
            let ch = parse_char_spec(spec).ok_or_else(|| err(line_no, format!("bad character {spec:?}")))?;
            let mut rows = Vec::with_capacity(height);
            for _ in 0..height {
                let (row_no, row) = *raw
                    .get(cursor)
                    .ok_or_else(|| err(line_no, format!("glyph {spec:?} ends early")))?;
                cursor += 1;
                if row.chars().count() != width {
                    return Err(err(row_no, format!("row must be {width} cells wide")));
                }
                let bits = row
                    .chars()
                    .map(|c| match c {
                        '#' => Ok(true),
                        '.' => Ok(false),
                        other => Err(err(row_no, format!("unexpected cell {other:?}"))),
                    })
                    .collect::<Result<Vec<bool>, _>>()?;
                rows.push(bits);
            }
            if glyphs.insert(ch, rows).is_some() {
                return Err(err(line_no, format!("duplicate glyph {spec:?}")));
            }
        }
        Ok(Self { width, height, glyphs })
    }
}

fn parse_char_spec(spec: &str) -> Option<char> {
    if let Some(hex) = spec.strip_prefix("U+") {
        return u32::from_str_radix(hex, 16).ok().and_then(char::from_u32);
    }
    let mut chars = spec.chars();
    let c = chars.next()?;
    chars.next().is_none().then_some(c)
}

/// Which face [`render`](super::render) draws with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum FontSpec {
    /// Built-in 5x7 dot matrix.
    #[default]
    SyntheticBlock,
    Bitmap(Arc<BitmapFont>),
}

impl FontSpec {
    pub const SYNTHETIC_BLOCK: &'static str = "synthetic-block";

    /// `"synthetic-block"` or a path to a bitmap font file.
    pub fn resolve(name: &str) -> Result<Self, FontError> {
        if name == Self::SYNTHETIC_BLOCK {
            Ok(FontSpec::SyntheticBlock)
        } else {
            Ok(FontSpec::Bitmap(Arc::new(BitmapFont::load(name)?)))
        }
    }

    pub fn glyph_width(&self) -> usize {
        match self {
            FontSpec::SyntheticBlock => BLOCK_WIDTH,
            FontSpec::Bitmap(f) => f.width,
        }
    }

    pub fn glyph_height(&self) -> usize {
        match self {
            FontSpec::SyntheticBlock => BLOCK_HEIGHT,
            FontSpec::Bitmap(f) => f.height,
        }
    }

    /// Horizontal advance per character: the glyph plus one blank column.
    pub fn cell_width(&self) -> usize {
        self.glyph_width() + 1
    }

    /// Whether the cell at `(col, row)` of `c`'s glyph is inked.
    pub fn is_lit(&self, c: char, col: usize, row: usize) -> bool {
        match self {
            FontSpec::SyntheticBlock => {
                let rows = block_rows(c);
                rows[row] >> (BLOCK_WIDTH - 1 - col) & 1 == 1
            }
            FontSpec::Bitmap(f) => match f.glyphs.get(&c).or_else(|| f.glyphs.get(&c.to_ascii_uppercase())) {
                Some(rows) => rows[row][col],
                None => {
                    // hollow box for unmapped characters
                    row == 0 || row + 1 == f.height || col == 0 || col + 1 == f.width
                }
            },
        }
    }
}

impl fmt::Display for FontSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FontSpec::SyntheticBlock => f.write_str(Self::SYNTHETIC_BLOCK),
            FontSpec::Bitmap(b) => write!(f, "bitmap {}x{} ({} glyphs)", b.width, b.height, b.glyphs.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_face_shapes() {
        let f = FontSpec::SyntheticBlock;
        // top row of 'A' is .###.
        let top: Vec<bool> = (0..5).map(|c| f.is_lit('A', c, 0)).collect();
        assert_eq!(top, [false, true, true, true, false]);
        // lowercase shares the uppercase shape
        for row in 0..7 {
            for col in 0..5 {
                assert_eq!(f.is_lit('q', col, row), f.is_lit('Q', col, row));
            }
        }
        assert!((0..7).all(|r| (0..5).all(|c| !f.is_lit(' ', c, r))));
        assert!(f.is_lit('\u{263A}', 0, 0));
    }

    #[test]
    fn parse_bitmap_font() {
        let text = "# tiny face\nsize 3 2\nchar A\n.#.\n#.#\nchar U+0023\n###\n###\n";
        let font = BitmapFont::parse(text).unwrap();
        assert_eq!((font.width(), font.height(), font.len()), (3, 2, 2));
        let spec = FontSpec::Bitmap(Arc::new(font));
        assert!(spec.is_lit('A', 1, 0));
        assert!(!spec.is_lit('A', 0, 0));
        assert!(spec.is_lit('a', 1, 0));
        assert!(spec.is_lit('#', 0, 1));
    }

    #[test]
    fn bitmap_font_errors_name_the_line() {
        let cases = [
            ("", 1),
            ("size 3\n", 1),
            ("size 3 1\nchar A\n.#\n", 3),
            ("size 1 1\nchar A\nx\n", 3),
            ("size 1 1\nchar AB\n#\n", 2),
            ("size 1 1\nchar A\n#\nchar A\n.\n", 4),
            ("size 2 2\nchar A\n##\n", 2),
        ];
        for (text, want) in cases {
            match BitmapFont::parse(text) {
                Err(FontError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
