mod commands;
mod output;
mod pipeline_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use glyphfix::annealer::{AnnealConfig, MoveMode};
use glyphfix::geometry::Canvas;

#[derive(Parser)]
#[command(
    name = "glyphfix",
    version,
    about = "Keyword layout de-overlap, glyph rendering and OCR-driven repaint"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anneal a layout to remove box overlap.
    Optimize(OptimizeArgs),
    /// Draw a layout's keywords into a glyph image.
    Render(RenderArgs),
    /// Generate a benchmark subset.
    Genbench(GenbenchArgs),
    /// Run the layout, generate and repaint loop over prompts or records.
    Pipeline(PipelineArgs),
    /// Score predicted text against benchmark records.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Clone)]
pub struct AnnealArgs {
    /// Annealing passes.
    #[arg(long, default_value_t = 70)]
    max_iter: usize,
    /// Temperature drop per pass.
    #[arg(long, default_value_t = 1.0 / 3000.0)]
    cooling_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    init_temp: f64,
    /// Largest step as a fraction of the canvas side at temperature 1.
    #[arg(long, default_value_t = 0.05)]
    max_shift: f64,
    #[arg(long, value_enum, default_value_t = MoveArg::Single)]
    moves: MoveArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MoveArg {
    Single,
    All,
}

impl AnnealArgs {
    pub fn config(&self, seed: u64) -> AnnealConfig {
        AnnealConfig {
            initial_temperature: self.init_temp,
            cooling_rate: self.cooling_rate,
            max_iterations: self.max_iter,
            max_shift_fraction: self.max_shift,
            seed,
            move_mode: match self.moves {
                MoveArg::Single => MoveMode::SingleBox,
                MoveArg::All => MoveMode::AllBoxes,
            },
        }
    }
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Layout JSON.
    #[arg(long)]
    layout: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "GLYPHFIX_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    anneal: AnnealArgs,
}

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long)]
    layout: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `synthetic-block` or a bitmap font file.
    #[arg(long, env = "GLYPHFIX_FONT", default_value = "synthetic-block")]
    font: String,
    /// Also write glyph.png.
    #[arg(long)]
    png: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SubsetArg {
    /// Keep input prompts with at least --min-keywords quoted keywords.
    MarioHardFilter,
    /// Filtered prompts with corrupted keywords.
    Aug,
    /// Random uncommon-word combinations in a template.
    Rwc,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AugArg {
    Spelling,
    Keyboard,
    Splitting,
}

#[derive(Args)]
pub struct GenbenchArgs {
    #[arg(long, value_enum)]
    subset: SubsetArg,
    #[arg(long)]
    out: PathBuf,
    /// Prompts, one per line, or records JSONL (for mario-hard-filter and aug).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of records (rwc).
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Word list, one per line (rwc). Defaults to generated pseudo-words.
    #[arg(long, env = "GLYPHFIX_WORDS")]
    words: Option<PathBuf>,
    /// Prompt template with one `{}` placeholder (rwc).
    #[arg(long, default_value = glyphfix::benchgen::TEMPLATE_NEON_OF)]
    template: String,
    #[arg(long, default_value_t = 0.25)]
    punctuation_prob: f64,
    #[arg(long, default_value_t = glyphfix::benchgen::DEFAULT_MIN_KEYWORDS)]
    min_keywords: usize,
    /// Fixed augmentation (aug); drawn per record when omitted.
    #[arg(long, value_enum)]
    augmentation: Option<AugArg>,
    /// Per-keyword corruption probability (aug).
    #[arg(long, default_value_t = 0.5)]
    aug_prob: f64,
    #[arg(long, env = "GLYPHFIX_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// Records JSONL.
    #[arg(long, conflicts_with = "prompt", required_unless_present = "prompt")]
    records: Option<PathBuf>,
    /// A single prompt; keywords are its quoted spans unless --keyword is given.
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long = "keyword", requires = "prompt")]
    keywords: Vec<String>,
    /// Starting layout for --prompt, instead of the built-in rough layout.
    #[arg(long, requires = "prompt")]
    layout: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "GLYPHFIX_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "GLYPHFIX_JOBS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,
    /// Repaint rounds.
    #[arg(long, default_value_t = 2)]
    iterations: usize,
    /// Keep a round's image only when word F1 does not drop.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    accept_if_better: bool,
    #[command(flatten)]
    anneal: AnnealArgs,
    #[arg(long, default_value = "512x512", value_parser = parse_canvas)]
    canvas: Canvas,
    #[arg(long, env = "GLYPHFIX_FONT", default_value = "synthetic-block")]
    font: String,
    /// `sim` or `exec:<program>`.
    #[arg(long, env = "GLYPHFIX_BACKEND", default_value = "sim", value_parser = parse_backend)]
    backend: BackendArg,
    /// `sim` or `exec:<program>`.
    #[arg(long, env = "GLYPHFIX_OCR", default_value = "sim", value_parser = parse_backend)]
    ocr: BackendArg,
    #[arg(long, default_value_t = 0.1)]
    p_missing: f64,
    #[arg(long, default_value_t = 0.3)]
    p_misspell: f64,
    #[arg(long, default_value_t = 0.1)]
    p_blur: f64,
    /// Repaint inside the detected box or the layout box.
    #[arg(long, value_enum, default_value_t = MaskArg::Detected)]
    mask: MaskArg,
    /// Also write final.png per record.
    #[arg(long)]
    png: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MaskArg {
    Detected,
    Layout,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BackendArg {
    Sim,
    Exec(PathBuf),
}

impl std::fmt::Display for BackendArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendArg::Sim => f.write_str("sim"),
            BackendArg::Exec(p) => write!(f, "exec:{}", p.display()),
        }
    }
}

fn parse_backend(s: &str) -> Result<BackendArg, String> {
    match s.split_once(':') {
        _ if s == "sim" => Ok(BackendArg::Sim),
        Some(("exec", path)) if !path.is_empty() => Ok(BackendArg::Exec(PathBuf::from(path))),
        _ => Err(format!("expected `sim` or `exec:<program>`, got `{s}`")),
    }
}

fn parse_canvas(s: &str) -> Result<Canvas, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w.trim().parse().map_err(|e| format!("canvas width: {e}"))?;
    let h: u32 = h.trim().parse().map_err(|e| format!("canvas height: {e}"))?;
    if w > 16384 || h > 16384 {
        return Err("canvas sides are limited to 16384".into());
    }
    Canvas::new(w, h).map_err(|e| e.to_string())
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Benchmark records JSONL; truth text is the keywords joined by spaces.
    #[arg(long)]
    truth: PathBuf,
    /// JSONL lines of `{"id": ..., "text": ...}`.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Externally computed CLIPScore to carry into the report.
    #[arg(long)]
    clipscore: Option<f64>,
}

/// Exit 2: the input or invocation was bad. Exit 1: the run itself failed.
pub enum Failure {
    Input(anyhow::Error),
    Run(anyhow::Error),
}

pub trait InputContext<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> InputContext<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Render(a) => commands::render(a),
        Command::Genbench(a) => commands::genbench(a),
        Command::Pipeline(a) => pipeline_cmd::run(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
