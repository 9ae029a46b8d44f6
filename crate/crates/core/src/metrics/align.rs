//! Set overlap and local sequence alignment.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Intersection over union; two empty sets score 1.
pub fn iou_set<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Smith-Waterman scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlignParams {
    #[serde(rename = "match")]
    pub match_score: f64,
    pub mismatch: f64,
    pub gap: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        Self { match_score: 2.0, mismatch: -1.0, gap: -1.0 }
    }
}

impl AlignParams {
    pub fn is_valid(&self) -> bool {
        self.match_score > 0.0 && self.mismatch <= 0.0 && self.gap <= 0.0
    }
}

/// Best local alignment score of two sequences.
pub fn smith_waterman<T: PartialEq>(a: &[T], b: &[T], p: &AlignParams) -> f64 {
    let mut prev = vec![0.0; b.len() + 1];
    let mut best: f64 = 0.0;
    for x in a {
        let mut row = vec![0.0; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            let diag = prev[j] + if x == y { p.match_score } else { p.mismatch };
            row[j + 1] = 0f64.max(diag).max(prev[j + 1] + p.gap).max(row[j] + p.gap);
            best = best.max(row[j + 1]);
        }
        prev = row;
    }
    best
}

/// Local alignment score normalized by `match * min(|a|, |b|)` and clamped
/// to `[0, 1]`. Two empty sequences score 1; one empty sequence scores 0.
pub fn sim_exec<T: PartialEq>(a: &[T], b: &[T], p: &AlignParams) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (smith_waterman(a, b, p) / (p.match_score * a.len().min(b.len()) as f64)).clamp(0.0, 1.0),
    }
}
