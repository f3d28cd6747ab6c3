//! OCR text-accuracy metrics.
//!
//! Word level compares multisets of normalized tokens; character level
//! compares multisets of case-folded, non-whitespace characters. For both:
//!
//! * precision = matched / |pred|, recall = matched / |truth|
//! * f1 = 2PR / (P + R)
//! * accuracy = matched / (|truth| + |pred| - matched), the multiset Jaccard
//!
//! with every ratio defined as 0 when its denominator is 0, except that two
//! empty inputs agree perfectly.

use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty set of records")]
    Empty,
}

/// Case-folded whitespace tokens. Punctuation stays attached to its token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WordSet(Vec<String>);

impl WordSet {
    pub fn from_text(text: &str) -> Self {
        WordSet(text.split_whitespace().map(str::to_lowercase).collect())
    }

    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        WordSet(
            words
                .iter()
                .flat_map(|w| w.as_ref().split_whitespace())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

/// Case-fold and collapse runs of whitespace to one space.
pub fn normalize(text: &str) -> String {
    WordSet::from_text(text).joined()
}

/// Unit-cost edit distance over Unicode scalar values, two-row DP.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Normalized Levenshtein distance on a 0-100 scale.
pub fn nld(truth: &str, pred: &str) -> f64 {
    let longest = truth.chars().count().max(pred.chars().count());
    if longest == 0 {
        return 0.0;
    }
    100.0 * levenshtein(truth, pred) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl Prf {
    pub const PERFECT: Prf = Prf {
        precision: 1.0,
        recall: 1.0,
        f1: 1.0,
        accuracy: 1.0,
    };

    /// Scores from the multiset sizes.
    pub fn from_counts(matched: usize, truth: usize, pred: usize) -> Prf {
        if truth == 0 && pred == 0 {
            return Prf::PERFECT;
        }
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(matched, pred);
        let recall = ratio(matched, truth);
        Prf {
            precision,
            recall,
            // harmonic mean of P and R, in counts to avoid rounding twice
            f1: ratio(2 * matched, truth + pred),
            accuracy: ratio(matched, truth + pred - matched),
        }
    }
}

/// Size of the multiset intersection.
pub fn multiset_matches<T: Eq + Hash>(truth: impl IntoIterator<Item = T>, pred: impl IntoIterator<Item = T>) -> usize {
    let mut counts: HashMap<T, usize> = HashMap::new();
    for t in truth {
        *counts.entry(t).or_default() += 1;
    }
    let mut matched = 0;
    for p in pred {
        if let Some(c) = counts.get_mut(&p) {
            if *c > 0 {
                *c -= 1;
                matched += 1;
            }
        }
    }
    matched
}

pub fn word_metrics(truth: &WordSet, pred: &WordSet) -> Prf {
    let matched = multiset_matches(truth.tokens(), pred.tokens());
    Prf::from_counts(matched, truth.len(), pred.len())
}

fn folded_chars(text: &str) -> Vec<char> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Order-insensitive character scores; whitespace is ignored.
pub fn char_metrics(truth: &str, pred: &str) -> Prf {
    let t = folded_chars(truth);
    let p = folded_chars(pred);
    let matched = multiset_matches(t.iter(), p.iter());
    Prf::from_counts(matched, t.len(), p.len())
}

pub fn sentence_exact(truth: &str, pred: &str) -> bool {
    normalize(truth) == normalize(pred)
}

/// All text scores for one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TextScores {
    pub word: Prf,
    pub char: Prf,
    pub sentence_exact: bool,
    /// NLD of the normalized texts, 0-100.
    pub nld: f64,
}

/// Score `pred` against `truth`. Both are whole texts; NLD compares their
/// normalized forms.
pub fn score_text(truth: &str, pred: &str) -> TextScores {
    let (nt, np) = (normalize(truth), normalize(pred));
    TextScores {
        word: word_metrics(&WordSet::from_text(truth), &WordSet::from_text(pred)),
        char: char_metrics(truth, pred),
        sentence_exact: nt == np,
        nld: nld(&nt, &np),
    }
}

/// Metrics for one benchmark record.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecordMetrics {
    pub id: String,
    pub keyword_count: usize,
    pub scores: TextScores,
    /// Raw summed pairwise overlap of the layout used, in px².
    pub overlap_area: Option<f64>,
    /// Weighted overlap energy of the layout used.
    pub overlap_energy: Option<f64>,
    pub iou: Option<f64>,
}

/// Arithmetic means over records.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub records: usize,
    pub word: Prf,
    pub char: Prf,
    /// Fraction of records whose text matched exactly.
    pub sentence_accuracy: f64,
    pub nld: f64,
    pub overlap_area: Option<f64>,
    pub overlap_energy: Option<f64>,
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Supplied from outside; never computed here.
    pub clipscore: Option<f64>,
    pub aggregate: AggregateMetrics,
    pub records: Vec<RecordMetrics>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct OptionalSum {
    sum: f64,
    n: usize,
}

impl OptionalSum {
    fn add(&mut self, v: Option<f64>) {
        if let Some(v) = v {
            self.sum += v;
            self.n += 1;
        }
    }

    fn merge(&mut self, other: &OptionalSum) {
        self.sum += other.sum;
        self.n += other.n;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Running sums behind [`aggregate`]. `merge` is associative, so partial
/// accumulators from parallel workers can be combined in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricAccumulator {
    n: usize,
    word: [f64; 4],
    char: [f64; 4],
    exact: usize,
    nld: f64,
    overlap_area: OptionalSum,
    overlap_energy: OptionalSum,
    iou: OptionalSum,
}

fn prf_array(p: &Prf) -> [f64; 4] {
    [p.precision, p.recall, p.f1, p.accuracy]
}

fn prf_mean(sums: &[f64; 4], n: usize) -> Prf {
    let n = n as f64;
    Prf {
        precision: sums[0] / n,
        recall: sums[1] / n,
        f1: sums[2] / n,
        accuracy: sums[3] / n,
    }
}

impl MetricAccumulator {
    pub fn add(&mut self, r: &RecordMetrics) {
        self.n += 1;
        for (acc, v) in self.word.iter_mut().zip(prf_array(&r.scores.word)) {
            *acc += v;
        }
        for (acc, v) in self.char.iter_mut().zip(prf_array(&r.scores.char)) {
            *acc += v;
        }
        self.exact += usize::from(r.scores.sentence_exact);
        self.nld += r.scores.nld;
        self.overlap_area.add(r.overlap_area);
        self.overlap_energy.add(r.overlap_energy);
        self.iou.add(r.iou);
    }

    pub fn merge(mut self, other: &MetricAccumulator) -> MetricAccumulator {
        self.n += other.n;
        for i in 0..4 {
            self.word[i] += other.word[i];
            self.char[i] += other.char[i];
        }
        self.exact += other.exact;
        self.nld += other.nld;
        self.overlap_area.merge(&other.overlap_area);
        self.overlap_energy.merge(&other.overlap_energy);
        self.iou.merge(&other.iou);
        self
    }

    pub fn finish(&self) -> Result<AggregateMetrics, MetricsError> {
        if self.n == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(AggregateMetrics {
            records: self.n,
            word: prf_mean(&self.word, self.n),
            char: prf_mean(&self.char, self.n),
            sentence_accuracy: self.exact as f64 / self.n as f64,
            nld: self.nld / self.n as f64,
            overlap_area: self.overlap_area.mean(),
            overlap_energy: self.overlap_energy.mean(),
            iou: self.iou.mean(),
        })
    }
}

pub fn aggregate(records: &[RecordMetrics]) -> Result<AggregateMetrics, MetricsError> {
    let mut acc = MetricAccumulator::default();
    records.iter().for_each(|r| acc.add(r));
    acc.finish()
}

pub const CSV_HEADER: [&str; 17] = [
    "id",
    "keyword_count",
    "clipscore",
    "char_precision",
    "char_recall",
    "char_f1",
    "char_accuracy",
    "word_precision",
    "word_recall",
    "word_f1",
    "word_accuracy",
    "nld",
    "sentence_exact",
    "overlap_area",
    "overlap_energy",
    "iou",
    "kind",
];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl EvalReport {
    pub fn new(records: Vec<RecordMetrics>, clipscore: Option<f64>) -> Result<Self, MetricsError> {
        Ok(EvalReport {
            clipscore,
            aggregate: aggregate(&records)?,
            records,
        })
    }

    /// One row per record, then an `aggregate` row. Columns follow the
    /// usual results-table order: CLIPScore, character P/R/F1/Acc, word
    /// P/R/F1/Acc, NLD, then layout measures.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let clip = opt(self.clipscore);
        for r in &self.records {
            let s = &r.scores;
            w.write_record([
                r.id.clone(),
                r.keyword_count.to_string(),
                String::new(),
                s.char.precision.to_string(),
                s.char.recall.to_string(),
                s.char.f1.to_string(),
                s.char.accuracy.to_string(),
                s.word.precision.to_string(),
                s.word.recall.to_string(),
                s.word.f1.to_string(),
                s.word.accuracy.to_string(),
                s.nld.to_string(),
                u8::from(s.sentence_exact).to_string(),
                opt(r.overlap_area),
                opt(r.overlap_energy),
                opt(r.iou),
                "record".into(),
            ])?;
        }
        let a = &self.aggregate;
        let mean_keywords =
            self.records.iter().map(|r| r.keyword_count as f64).sum::<f64>() / self.records.len() as f64;
        w.write_record([
            "aggregate".to_string(),
            mean_keywords.to_string(),
            clip,
            a.char.precision.to_string(),
            a.char.recall.to_string(),
            a.char.f1.to_string(),
            a.char.accuracy.to_string(),
            a.word.precision.to_string(),
            a.word.recall.to_string(),
            a.word.f1.to_string(),
            a.word.accuracy.to_string(),
            a.nld.to_string(),
            a.sentence_accuracy.to_string(),
            opt(a.overlap_area),
            opt(a.overlap_energy),
            opt(a.iou),
            "aggregate".into(),
        ])?;
        w.flush()?;
        Ok(())
    }
}
