//! Grid search for the classification threshold.

use serde::{Deserialize, Serialize};

use super::metrics::{Confusion, Scores};
use crate::detector::{classify, Label};

/// `{0.00, 0.01, …, 1.00}`.
pub fn threshold_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub threshold: f64,
    pub scores: Scores,
    pub confusion: Confusion,
}

fn confusion_at(records: &[(f64, Label)], t: f64) -> Confusion {
    Confusion::tally(records.iter().map(|&(sim, gold)| (classify(sim, t), gold)))
}

/// Precision, recall and F-beta at every grid point.
pub fn pr_curve(records: &[(f64, Label)], beta: f64, grid: &[f64]) -> Vec<CurvePoint> {
    grid.iter()
        .map(|&t| {
            let s = Scores::from_confusion(&confusion_at(records, t), beta);
            CurvePoint {
                threshold: t,
                precision: s.precision,
                recall: s.recall,
                f_beta: s.f_beta,
            }
        })
        .collect()
}

/// The grid threshold maximising F-beta on `(nearest similarity, gold label)`
/// records. Ties go to the smallest threshold.
pub fn threshold_sweep(records: &[(f64, Label)], beta: f64, grid: &[f64]) -> SweepResult {
    let mut best: Option<SweepResult> = None;
    for &t in grid {
        let confusion = confusion_at(records, t);
        let scores = Scores::from_confusion(&confusion, beta);
        if best.is_none_or(|b| scores.f_beta > b.scores.f_beta) {
            best = Some(SweepResult {
                threshold: t,
                scores,
                confusion,
            });
        }
    }
    best.expect("threshold grid is non-empty")
}
