//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's own implementations of the quantities it checks.

#![allow(dead_code)]

use glyphfix::geometry::{BoundingBox, Canvas, Layout, LayoutEntry};
use glyphfix::seed::Rng;
use rand::Rng as _;

/// Per-cell coverage counts of the boxes, clipped to the canvas grid.
pub fn coverage(canvas: Canvas, boxes: &[BoundingBox]) -> Vec<u16> {
    let (w, h) = (canvas.width as i32, canvas.height as i32);
    let mut grid = vec![0u16; (w * h) as usize];
    for b in boxes {
        for y in b.y0.max(0)..b.y1.min(h) {
            for x in b.x0.max(0)..b.x1.min(w) {
                grid[(y * w + x) as usize] += 1;
            }
        }
    }
    grid
}

/// Cells covered by both boxes, counted one by one.
pub fn grid_pair_overlap(a: &BoundingBox, b: &BoundingBox) -> i64 {
    let mut n = 0;
    for y in a.y0.min(b.y0)..a.y1.max(b.y1) {
        for x in a.x0.min(b.x0)..a.x1.max(b.x1) {
            let in_a = x >= a.x0 && x < a.x1 && y >= a.y0 && y < a.y1;
            let in_b = x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1;
            if in_a && in_b {
                n += 1;
            }
        }
    }
    n
}

pub struct GridMeasure {
    pub total_overlap: i64,
    pub union: i64,
}

/// Sum of pairwise overlaps is Σ_cells C(k, 2) for coverage k; the union is
/// the number of cells with k ≥ 1.
pub fn grid_measure(canvas: Canvas, boxes: &[BoundingBox]) -> GridMeasure {
    let grid = coverage(canvas, boxes);
    let mut total_overlap = 0i64;
    let mut union = 0i64;
    for &k in &grid {
        let k = i64::from(k);
        total_overlap += k * (k - 1) / 2;
        union += i64::from(k > 0);
    }
    GridMeasure { total_overlap, union }
}

pub fn grid_iou(canvas: Canvas, boxes: &[BoundingBox]) -> f64 {
    let m = grid_measure(canvas, boxes);
    if m.union == 0 {
        0.0
    } else {
        m.total_overlap as f64 / m.union as f64
    }
}

/// Textbook Wagner-Fischer with the whole (m+1)×(n+1) table kept.
pub fn dp_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn dp_nld(truth: &str, pred: &str) -> f64 {
    let n = truth.chars().count().max(pred.chars().count());
    if n == 0 {
        0.0
    } else {
        100.0 * dp_levenshtein(truth, pred) as f64 / n as f64
    }
}

/// Every injective partial assignment of rows to columns that uses
/// min(rows, cols) pairs; returns the minimum total cost.
pub fn brute_force_assignment_cost(costs: &[Vec<f64>]) -> f64 {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    let k = rows.min(cols);
    fn go(costs: &[Vec<f64>], row: usize, used: &mut Vec<bool>, left: usize, acc: f64, best: &mut f64) {
        if left == 0 {
            *best = best.min(acc);
            return;
        }
        if costs.len() - row < left {
            return;
        }
        // skip this row
        go(costs, row + 1, used, left, acc, best);
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(costs, row + 1, used, left - 1, acc + costs[row][c], best);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(costs, 0, &mut vec![false; cols], k, 0.0, &mut best);
    if k == 0 {
        0.0
    } else {
        best
    }
}

pub fn random_box(rng: &mut Rng, canvas: Canvas, max_side: i32) -> BoundingBox {
    let w = rng.gen_range(1..=max_side.min(canvas.width as i32));
    let h = rng.gen_range(1..=max_side.min(canvas.height as i32));
    let x = rng.gen_range(0..=canvas.width as i32 - w);
    let y = rng.gen_range(0..=canvas.height as i32 - h);
    BoundingBox::from_origin(x, y, w, h).unwrap()
}

pub fn layout_of(canvas: Canvas, boxes: &[BoundingBox]) -> Layout {
    Layout::new(
        canvas,
        boxes
            .iter()
            .enumerate()
            .map(|(i, b)| LayoutEntry {
                word: format!("w{i}"),
                bbox: *b,
            })
            .collect(),
    )
    .unwrap()
}

/// Random layout on `canvas` with `n` boxes.
pub fn random_layout(rng: &mut Rng, canvas: Canvas, n: usize, max_side: i32) -> Layout {
    let boxes: Vec<BoundingBox> = (0..n).map(|_| random_box(rng, canvas, max_side)).collect();
    layout_of(canvas, &boxes)
}

/// 6–10 word-sized boxes crowded around the canvas centre, with at least
/// one overlapping pair.
pub fn crowded_layout(rng: &mut Rng, canvas: Canvas) -> Layout {
    loop {
        let n = rng.gen_range(6..=10);
        let (cx, cy) = (canvas.width as i32 / 2, canvas.height as i32 / 2);
        let boxes: Vec<BoundingBox> = (0..n)
            .map(|_| {
                let w = rng.gen_range(40..=120);
                let h = rng.gen_range(20..=50);
                let x = cx + rng.gen_range(-45..=45) - w / 2;
                let y = cy + rng.gen_range(-45..=45) - h / 2;
                BoundingBox::from_origin(x, y, w, h).unwrap()
            })
            .collect();
        let m = grid_measure(canvas, &boxes);
        if m.total_overlap > 0 {
            return layout_of(canvas, &boxes);
        }
    }
}

pub fn random_string(rng: &mut Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
