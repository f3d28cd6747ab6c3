#![no_main]

use glyphfix::glyph::GrayImage;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = GrayImage::from_pgm(data) {
        assert_eq!(img.pixels().len(), img.width() * img.height());
        assert_eq!(GrayImage::from_pgm(&img.to_pgm()).unwrap(), img);
    }
});
