//! Precision, recall and F-beta with the unassigned label as the positive class.

use serde::{Deserialize, Serialize};

use crate::detector::Label;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// Tallies `(predicted, gold)` pairs.
    pub fn tally<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        let mut c = Confusion::default();
        for (pred, gold) in pairs {
            match (pred, gold) {
                (Label::Unassigned, Label::Unassigned) => c.tp += 1,
                (Label::Unassigned, Label::Assigned) => c.fp += 1,
                (Label::Assigned, Label::Unassigned) => c.fn_ += 1,
                (Label::Assigned, Label::Assigned) => c.tn += 1,
            }
        }
        c
    }

    /// `None` when nothing was predicted positive.
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// `None` when there are no actual positives.
    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }
}

/// Precision and recall of parallel prediction and gold label slices.
pub fn precision_recall(preds: &[Label], gold: &[Label]) -> (Option<f64>, Option<f64>) {
    assert_eq!(preds.len(), gold.len(), "predictions and labels differ in length");
    let c = Confusion::tally(preds.iter().copied().zip(gold.iter().copied()));
    (c.precision(), c.recall())
}

/// `(1 + β²)·P·R / (β²·P + R)`, and 0 when `P = R = 0`.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        return 0.0;
    }
    (1.0 + b2) * precision * recall / den
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Undefined precision or recall count as a score of 0.
    pub f_beta: f64,
}

impl Scores {
    pub fn from_confusion(c: &Confusion, beta: f64) -> Self {
        let (precision, recall) = (c.precision(), c.recall());
        let f = match (precision, recall) {
            (Some(p), Some(r)) => f_beta(p, r, beta),
            _ => 0.0,
        };
        Scores {
            precision,
            recall,
            f_beta: f,
        }
    }
}
