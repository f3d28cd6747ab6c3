//! Adapters that delegate generation and recognition to external programs.
//!
//! Files are exchanged through a scratch directory and their paths are
//! passed as arguments:
//!
//! * generator: `PROGRAM prompt.txt glyph.pgm PRIOR targets.json out.pgm out.manifest.json`,
//!   where `PRIOR` is `prior.pgm` or `-` for the first generation. The
//!   program must write `out.pgm`; `out.manifest.json` is optional.
//! * OCR: `PROGRAM image.pgm out.jsonl`, one detection per line.

use std::path::{Path, PathBuf};
use std::process::Command;

use crate::glyph::GrayImage;

use super::types::{BackendError, GenerateRequest, GeneratedImage, GeneratorBackend, Manifest, OcrBackend, OcrResult};

fn run(program: &Path, args: &[&Path]) -> Result<(), BackendError> {
    let output = Command::new(program)
        .args(args)
        .output()
        .map_err(|source| BackendError::Spawn {
            program: program.display().to_string(),
            source,
        })?;
    if !output.status.success() {
        return Err(BackendError::Failed {
            program: program.display().to_string(),
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_owned(),
        });
    }
    Ok(())
}

fn call_dir(root: &Path, kind: &str, n: usize) -> Result<PathBuf, BackendError> {
    let dir = root.join(format!("{kind}-{n:03}"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub struct ExecGenerator {
    program: PathBuf,
    workdir: PathBuf,
    calls: usize,
}

impl ExecGenerator {
    pub fn new(program: impl Into<PathBuf>, workdir: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            workdir: workdir.into(),
            calls: 0,
        }
    }
}

impl GeneratorBackend for ExecGenerator {
    fn generate(&mut self, request: &GenerateRequest<'_>) -> Result<GeneratedImage, BackendError> {
        let dir = call_dir(&self.workdir, "generate", self.calls)?;
        self.calls += 1;
        let prompt = dir.join("prompt.txt");
        let glyph = dir.join("glyph.pgm");
        let targets = dir.join("targets.json");
        let out = dir.join("out.pgm");
        let out_manifest = dir.join("out.manifest.json");
        std::fs::write(&prompt, request.prompt)?;
        request.glyph.image.write_pgm(&glyph)?;
        std::fs::write(
            &targets,
            serde_json::to_vec(request.targets).expect("targets serialize"),
        )?;
        let prior = match request.prior {
            Some(p) => {
                let path = dir.join("prior.pgm");
                p.image.write_pgm(&path)?;
                path
            }
            None => PathBuf::from("-"),
        };
        run(&self.program, &[&prompt, &glyph, &prior, &targets, &out, &out_manifest])?;

        let image = GrayImage::read_pgm(&out)?;
        if (image.width(), image.height()) != (request.glyph.width(), request.glyph.height()) {
            return Err(BackendError::Output(format!(
                "generated image is {}x{}, expected {}x{}",
                image.width(),
                image.height(),
                request.glyph.width(),
                request.glyph.height()
            )));
        }
        let manifest = if out_manifest.exists() {
            let text = std::fs::read_to_string(&out_manifest)?;
            Some(serde_json::from_str::<Manifest>(&text).map_err(|e| BackendError::Output(format!("manifest: {e}")))?)
        } else {
            None
        };
        Ok(GeneratedImage { image, manifest })
    }
}

pub struct ExecOcr {
    program: PathBuf,
    workdir: PathBuf,
    calls: usize,
}

impl ExecOcr {
    pub fn new(program: impl Into<PathBuf>, workdir: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            workdir: workdir.into(),
            calls: 0,
        }
    }
}

impl OcrBackend for ExecOcr {
    fn recognize(&mut self, image: &GeneratedImage) -> Result<OcrResult, BackendError> {
        let dir = call_dir(&self.workdir, "ocr", self.calls)?;
        self.calls += 1;
        let input = dir.join("image.pgm");
        let out = dir.join("out.jsonl");
        image.image.write_pgm(&input)?;
        run(&self.program, &[&input, &out])?;
        let text = std::fs::read_to_string(&out)?;
        let result = OcrResult::parse_jsonl(&text).map_err(|e| BackendError::Output(e.to_string()))?;
        Ok(result.clipped_to(image.image.width(), image.image.height()))
    }
}
