//! Benchmark records for long and unusual visual text.
//!
//! Three subsets: `mario-hard` (prompts with at least four keywords),
//! `aug-mario-hard` (the same prompts with keywords corrupted by spelling,
//! keyboard or splitting noise) and `rwc` (templated prompts made of random
//! uncommon words and punctuation).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{self, Rng};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("template must contain exactly one `{placeholder}` placeholder, found {found}")]
    Template { placeholder: &'static str, found: usize },
    #[error("word list is empty")]
    EmptyWordList,
    #[error("record count must be at least 1")]
    ZeroCount,
    #[error("no records to summarize")]
    Empty,
    #[error("records line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subset {
    MarioHard,
    AugMarioHard,
    Rwc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Augmentation {
    Spelling,
    Keyboard,
    Splitting,
}

impl Augmentation {
    pub const ALL: [Augmentation; 3] = [Augmentation::Spelling, Augmentation::Keyboard, Augmentation::Splitting];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRecord {
    pub id: String,
    pub prompt: String,
    /// Ground-truth keywords, in prompt order.
    pub keywords: Vec<String>,
    pub subset: Subset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<Augmentation>,
    pub seed: u64,
}

/// Parse line-delimited records. Blank lines are skipped.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BenchRecord = serde_json::from_str(&line).map_err(|e| BenchError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn parse_records(text: &str) -> Result<Vec<BenchRecord>, BenchError> {
    read_records(text.as_bytes())
}

pub fn write_records<W: Write>(mut out: W, records: &[BenchRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Keywords of a caption-style prompt: the whitespace tokens of every
/// quoted span, in order. `'` and `"` both open a span that the same
/// character closes; an apostrophe inside a word (`don't`) does not open one.
pub fn extract_keywords(prompt: &str) -> Vec<String> {
    let chars: Vec<char> = prompt.chars().collect();
    let mut keywords = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let q = chars[i];
        let opens = (q == '\'' || q == '"') && (i == 0 || !chars[i - 1].is_alphanumeric());
        if opens {
            if let Some(len) = chars[i + 1..].iter().position(|&c| c == q) {
                let span: String = chars[i + 1..i + 1 + len].iter().collect();
                keywords.extend(span.split_whitespace().map(str::to_owned));
                i += len + 2;
                continue;
            }
        }
        i += 1;
    }
    keywords
}

/// Build a `mario-hard` style record from a caption prompt.
pub fn record_from_prompt(id: impl Into<String>, prompt: &str, seed: u64) -> BenchRecord {
    BenchRecord {
        id: id.into(),
        prompt: prompt.to_owned(),
        keywords: extract_keywords(prompt),
        subset: Subset::MarioHard,
        augmentation: None,
        seed,
    }
}

/// Keep records with at least `min_keywords` keywords, in order.
pub fn filter_hard(records: &[BenchRecord], min_keywords: usize) -> Vec<BenchRecord> {
    records
        .iter()
        .filter(|r| r.keywords.len() >= min_keywords)
        .cloned()
        .collect()
}

pub const DEFAULT_MIN_KEYWORDS: usize = 4;

const ALPHABET: &[u8; 26] = b"abcdefghijklmnopqrstuvwxyz";

fn match_case(template: char, c: char) -> char {
    if template.is_uppercase() {
        c.to_ascii_uppercase()
    } else {
        c
    }
}

fn random_letter_except(rng: &mut Rng, original: char) -> char {
    let skip = original.to_ascii_lowercase();
    loop {
        let c = ALPHABET[rng.gen_range(0..26)] as char;
        if c != skip {
            return c;
        }
    }
}

/// One spelling error: substitute a character with a different letter, or
/// transpose two adjacent differing characters (each with probability 1/2
/// when both are possible). `None` for words shorter than two characters.
pub fn augment_spelling(word: &str, rng: &mut Rng) -> Option<String> {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.len() < 2 {
        return None;
    }
    let swappable: Vec<usize> = (0..chars.len() - 1).filter(|&i| chars[i] != chars[i + 1]).collect();
    let transpose = rng.gen_bool(0.5);
    if transpose && !swappable.is_empty() {
        let i = swappable[rng.gen_range(0..swappable.len())];
        chars.swap(i, i + 1);
    } else {
        let i = rng.gen_range(0..chars.len());
        chars[i] = match_case(chars[i], random_letter_except(rng, chars[i]));
    }
    Some(chars.into_iter().collect())
}

/// US QWERTY rows, letters only.
const QWERTY: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];
/// Row stagger in quarter-key units.
const ROW_OFFSET: [i32; 3] = [0, 1, 3];

/// Keys touching `c` on a US QWERTY keyboard: row neighbours plus the keys
/// of adjacent rows within three quarters of a key width. Symmetric.
pub fn keyboard_neighbors(c: char) -> Vec<char> {
    let lower = c.to_ascii_lowercase();
    let pos = |ch: char| {
        QWERTY
            .iter()
            .enumerate()
            .find_map(|(r, row)| row.find(ch).map(|col| (r as i32, col as i32 * 4 + ROW_OFFSET[r])))
    };
    let Some((row, x)) = pos(lower) else {
        return Vec::new();
    };
    let mut out: Vec<char> = QWERTY
        .iter()
        .flat_map(|r| r.chars())
        .filter(|&k| k != lower)
        .filter(|&k| {
            let (r, kx) = pos(k).expect("key is on the board");
            match (r - row).abs() {
                0 => (kx - x).abs() == 4,
                1 => (kx - x).abs() <= 3,
                _ => false,
            }
        })
        .collect();
    out.sort_unstable();
    out
}

/// The full adjacency table.
pub fn keyboard_adjacency() -> BTreeMap<char, Vec<char>> {
    ('a'..='z').map(|c| (c, keyboard_neighbors(c))).collect()
}

/// Replace one letter with a keyboard neighbour, keeping its case. `None`
/// when the word has no ASCII letters.
pub fn augment_keyboard(word: &str, rng: &mut Rng) -> Option<String> {
    let mut chars: Vec<char> = word.chars().collect();
    let letters: Vec<usize> = (0..chars.len()).filter(|&i| chars[i].is_ascii_alphabetic()).collect();
    if letters.is_empty() {
        return None;
    }
    let i = letters[rng.gen_range(0..letters.len())];
    let neighbors = keyboard_neighbors(chars[i]);
    let pick = neighbors[rng.gen_range(0..neighbors.len())];
    chars[i] = match_case(chars[i], pick);
    Some(chars.into_iter().collect())
}

/// Split at `index` (in characters); `None` unless both parts are nonempty.
pub fn split_at_char(word: &str, index: usize) -> Option<(String, String)> {
    let n = word.chars().count();
    if index == 0 || index >= n {
        return None;
    }
    let byte = word.char_indices().nth(index).map(|(b, _)| b)?;
    Some((word[..byte].to_owned(), word[byte..].to_owned()))
}

/// Split at a uniformly chosen interior position. `None` for words shorter
/// than two characters.
pub fn augment_split(word: &str, rng: &mut Rng) -> Option<(String, String)> {
    let n = word.chars().count();
    if n < 2 {
        return None;
    }
    split_at_char(word, rng.gen_range(1..n))
}

/// Apply `aug` to a single keyword, yielding one or two tokens. Words the
/// augmentation cannot touch pass through unchanged.
pub fn augment_word(word: &str, aug: Augmentation, rng: &mut Rng) -> Vec<String> {
    match aug {
        Augmentation::Spelling => vec![augment_spelling(word, rng).unwrap_or_else(|| word.to_owned())],
        Augmentation::Keyboard => vec![augment_keyboard(word, rng).unwrap_or_else(|| word.to_owned())],
        Augmentation::Splitting => match augment_split(word, rng) {
            Some((a, b)) => vec![a, b],
            None => vec![word.to_owned()],
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Chance that each keyword is corrupted.
    pub probability: f64,
    /// Fixed augmentation, or one drawn uniformly per record when `None`.
    pub augmentation: Option<Augmentation>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            probability: 0.5,
            augmentation: None,
        }
    }
}

/// Corrupt a caption-style record. Keywords are replaced inside the quoted
/// spans of the prompt so the new keywords stay verbatim in it.
pub fn augment_record(record: &BenchRecord, config: &AugmentConfig, seed: u64) -> BenchRecord {
    let mut rng = seed::rng(seed);
    let aug = config
        .augmentation
        .unwrap_or_else(|| *Augmentation::ALL.choose(&mut rng).expect("nonempty"));
    let mut replaced: Vec<Vec<String>> = Vec::with_capacity(record.keywords.len());
    for k in &record.keywords {
        if rng.gen_bool(config.probability.clamp(0.0, 1.0)) {
            replaced.push(augment_word(k, aug, &mut rng));
        } else {
            replaced.push(vec![k.clone()]);
        }
    }
    let keywords: Vec<String> = replaced.iter().flatten().cloned().collect();
    BenchRecord {
        id: record.id.clone(),
        prompt: rewrite_quoted(&record.prompt, &record.keywords, &replaced),
        keywords,
        subset: Subset::AugMarioHard,
        augmentation: Some(aug),
        seed,
    }
}

/// Rebuild the prompt with each quoted keyword swapped for its replacement
/// tokens. Falls back to appending a fresh quoted span when the prompt's
/// quoted tokens do not line up with the keywords.
fn rewrite_quoted(prompt: &str, original: &[String], replaced: &[Vec<String>]) -> String {
    if extract_keywords(prompt) != original {
        let joined: Vec<&str> = replaced.iter().flatten().map(String::as_str).collect();
        return format!("{prompt} '{}'", joined.join(" "));
    }
    let chars: Vec<char> = prompt.chars().collect();
    let mut out = String::with_capacity(prompt.len() + 8);
    let mut next = 0;
    let mut i = 0;
    while i < chars.len() {
        let q = chars[i];
        let opens = (q == '\'' || q == '"') && (i == 0 || !chars[i - 1].is_alphanumeric());
        if opens {
            if let Some(len) = chars[i + 1..].iter().position(|&c| c == q) {
                let span: String = chars[i + 1..i + 1 + len].iter().collect();
                let count = span.split_whitespace().count();
                let tokens: Vec<&str> = replaced[next..next + count]
                    .iter()
                    .flatten()
                    .map(String::as_str)
                    .collect();
                next += count;
                out.push(q);
                out.push_str(&tokens.join(" "));
                out.push(q);
                i += len + 2;
                continue;
            }
        }
        out.push(q);
        i += 1;
    }
    out
}

pub const PLACEHOLDER: &str = "{}";
pub const TEMPLATE_NEON_OF: &str = "A neon sign of {}";
pub const TEMPLATE_NEON_SAYS: &str = "A neon sign that says '{}'";
pub const DEFAULT_PUNCTUATION: [char; 8] = ['!', '@', '%', '$', '&', '#', '*', '^'];
pub const RWC_MIN_WORDS: usize = 1;
pub const RWC_MAX_WORDS: usize = 10;

/// A prompt template with a single `{}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    prefix: String,
    suffix: String,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let found = text.matches(PLACEHOLDER).count();
        if found != 1 {
            return Err(BenchError::Template {
                placeholder: PLACEHOLDER,
                found,
            });
        }
        let (prefix, suffix) = text.split_once(PLACEHOLDER).expect("one placeholder");
        Ok(Self {
            prefix: prefix.to_owned(),
            suffix: suffix.to_owned(),
        })
    }

    pub fn fill(&self, placeholder: &str) -> String {
        format!("{}{}{}", self.prefix, placeholder, self.suffix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwcConfig {
    pub template: String,
    pub punctuation: Vec<char>,
    /// Chance that a token gets a punctuation mark appended.
    pub punctuation_probability: f64,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for RwcConfig {
    fn default() -> Self {
        Self {
            template: TEMPLATE_NEON_OF.to_owned(),
            punctuation: DEFAULT_PUNCTUATION.to_vec(),
            punctuation_probability: 0.25,
            min_words: RWC_MIN_WORDS,
            max_words: RWC_MAX_WORDS,
        }
    }
}

/// `count` random-word-combination records. Record `i` draws from its own
/// generator seeded with `derive_seed(seed, i)`.
pub fn rwc_generate(
    count: usize,
    words: &[String],
    config: &RwcConfig,
    seed: u64,
) -> Result<Vec<BenchRecord>, BenchError> {
    if count == 0 {
        return Err(BenchError::ZeroCount);
    }
    if words.is_empty() {
        return Err(BenchError::EmptyWordList);
    }
    let template = Template::parse(&config.template)?;
    let (lo, hi) = (config.min_words.max(1), config.max_words.max(config.min_words.max(1)));
    Ok((0..count)
        .map(|i| {
            let record_seed = seed::derive_seed(seed, i as u64);
            let mut rng = seed::rng(record_seed);
            let n = rng.gen_range(lo..=hi);
            let keywords: Vec<String> = (0..n)
                .map(|_| {
                    let mut token = words[rng.gen_range(0..words.len())].clone();
                    if !config.punctuation.is_empty() && rng.gen_bool(config.punctuation_probability.clamp(0.0, 1.0)) {
                        token.push(config.punctuation[rng.gen_range(0..config.punctuation.len())]);
                    }
                    token
                })
                .collect();
            BenchRecord {
                id: format!("rwc-{i:06}"),
                prompt: template.fill(&keywords.join(" ")),
                keywords,
                subset: Subset::Rwc,
                augmentation: None,
                seed: record_seed,
            }
        })
        .collect())
}

const ONSETS: [&str; 18] = [
    "b", "br", "d", "f", "g", "gl", "k", "l", "m", "n", "p", "qu", "r", "s", "sn", "t", "v", "z",
];
const VOWELS: [&str; 8] = ["a", "e", "i", "o", "u", "oo", "ea", "y"];
const CODAS: [&str; 9] = ["", "", "", "ck", "k", "n", "m", "r", "sh"];

/// A pronounceable nonsense word of 2-4 syllables.
pub fn pseudo_word(rng: &mut Rng) -> String {
    let syllables = rng.gen_range(2..=4);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
        w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
        w.push_str(CODAS[rng.gen_range(0..CODAS.len())]);
    }
    w
}

/// `n` distinct pseudo-words.
pub fn pseudo_words(n: usize, seed: u64) -> Vec<String> {
    let mut rng = seed::rng(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = pseudo_word(&mut rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub size: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub avg_words: f64,
}

pub fn stats(records: &[BenchRecord]) -> Result<BenchStats, BenchError> {
    let counts = records.iter().map(|r| r.keywords.len());
    let min_words = counts.clone().min().ok_or(BenchError::Empty)?;
    let max_words = counts.clone().max().ok_or(BenchError::Empty)?;
    let total: usize = counts.sum();
    Ok(BenchStats {
        size: records.len(),
        min_words,
        max_words,
        avg_words: total as f64 / records.len() as f64,
    })
}
