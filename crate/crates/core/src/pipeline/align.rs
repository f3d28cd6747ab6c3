//! Matching OCR detections to ground-truth keywords.

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingBox, Layout};
use crate::textmetrics::{levenshtein, normalize};

use super::types::{OcrResult, OcrWord};

/// A keyword judged wrong, and the region to repaint it in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flagged {
    pub index: usize,
    #[serde(flatten)]
    pub region: BoundingBox,
}

/// Minimum-cost assignment of rows to columns for a rectangular cost matrix
/// (`costs[r][c]`). Returns, per row, the assigned column; every row gets
/// one when there are at least as many columns as rows, otherwise every
/// column is used and the leftover rows get `None`.
pub fn min_cost_assignment(costs: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| costs[r][c]).collect()).collect();
        let by_col = hungarian(&transposed);
        let mut out = vec![None; rows];
        for (c, r) in by_col.into_iter().enumerate() {
            out[r] = Some(c);
        }
        return out;
    }
    hungarian(costs).into_iter().map(Some).collect()
}

/// Kuhn-Munkres with potentials, `n <= m`. Returns the column for each row.
fn hungarian(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    let m = a[0].len();
    // 1-based, column 0 is the virtual start
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

fn center_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Detections in a canonical order, so results never depend on the order
/// the engine reported them in.
fn canonical(ocr: &OcrResult) -> Vec<&OcrWord> {
    let mut d: Vec<&OcrWord> = ocr.detected.iter().collect();
    d.sort_by(|a, b| {
        (a.bbox.y0, a.bbox.x0, a.bbox.y1, a.bbox.x1, &a.word)
            .cmp(&(b.bbox.y0, b.bbox.x0, b.bbox.y1, b.bbox.x1, &b.word))
            .then(a.confidence.total_cmp(&b.confidence))
    });
    d
}

/// Cost of pairing keyword `k` with detection `d`: edit distance first,
/// box-centre distance only to break ties.
pub(crate) fn assignment_costs(layout: &Layout, detections: &[&OcrWord]) -> Vec<Vec<f64>> {
    let max_dist = layout
        .boxes()
        .flat_map(|k| detections.iter().map(move |d| center_distance(k, &d.bbox)))
        .fold(0.0f64, f64::max);
    let pairs = layout.len().min(detections.len()) as f64;
    let weight = pairs * max_dist + 1.0;
    layout
        .entries()
        .iter()
        .map(|e| {
            let truth = normalize(&e.word);
            detections
                .iter()
                .map(|d| levenshtein(&truth, &normalize(&d.word)) as f64 * weight + center_distance(&e.bbox, &d.bbox))
                .collect()
        })
        .collect()
}

/// For each keyword, the detection assigned to it (in canonical order).
fn assign<'a>(layout: &Layout, ocr: &'a OcrResult) -> (Vec<&'a OcrWord>, Vec<Option<usize>>) {
    let detections = canonical(ocr);
    let costs = assignment_costs(layout, &detections);
    let assigned = if detections.is_empty() {
        vec![None; layout.len()]
    } else {
        min_cost_assignment(&costs)
    };
    (detections, assigned)
}

/// Keywords that OCR did not read back correctly.
///
/// A keyword is flagged when no detection is assigned to it or when its
/// assigned detection differs after normalization. The region is the
/// detection's box, or the keyword's layout box when it went unread.
pub fn detect_misspellings(layout: &Layout, ocr: &OcrResult) -> Vec<Flagged> {
    let (detections, assigned) = assign(layout, ocr);
    layout
        .entries()
        .iter()
        .zip(&assigned)
        .enumerate()
        .filter_map(|(index, (entry, a))| match a {
            Some(j) if normalize(&detections[*j].word) == normalize(&entry.word) => None,
            Some(j) => Some(Flagged {
                index,
                region: detections[*j].bbox,
            }),
            None => Some(Flagged {
                index,
                region: entry.bbox,
            }),
        })
        .collect()
}

/// The recognized text in keyword order: each keyword's assigned detection,
/// followed by unassigned detections in reading order.
pub fn aligned_prediction(layout: &Layout, ocr: &OcrResult) -> Vec<String> {
    let (detections, assigned) = assign(layout, ocr);
    let mut used = vec![false; detections.len()];
    let mut out = Vec::with_capacity(detections.len());
    for j in assigned.into_iter().flatten() {
        used[j] = true;
        out.push(detections[j].word.clone());
    }
    out.extend(
        detections
            .iter()
            .zip(&used)
            .filter(|(_, u)| !**u)
            .map(|(d, _)| d.word.clone()),
    );
    out
}
