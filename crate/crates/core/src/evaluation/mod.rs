//! Model selection: sense-masking simulation, cross-validation, threshold
//! sweeps, baselines and report rendering.

pub mod baselines;
pub mod cv;
pub mod masking;
pub mod metrics;
pub mod report;
pub mod sweep;

use thiserror::Error;

use crate::inventory::SenseId;

pub use baselines::{assigned_share, frequency_baseline, random_baseline};
pub use cv::{run_cross_validation, CvReport, EvalConfig, FoldReport, RoundReport, SimTable, UsageSims};
pub use masking::{build_masking_plan, derive_labels, GoldAssignment, GoldRecord, GoldUsage, HeadwordMask, MaskingPlan};
pub use metrics::{f_beta, precision_recall, Confusion, Scores};
pub use sweep::{pr_curve, threshold_grid, threshold_sweep, CurvePoint, SweepResult};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("usage {usage}: sense {sense} is not a sense of headword {headword:?}")]
    UnknownSense {
        usage: String,
        sense: SenseId,
        headword: String,
    },
    #[error("fold {fold} of round {round} has no usages; too little data for {folds} folds")]
    EmptyFold { round: usize, fold: usize, folds: usize },
    #[error("no similarities for usage {0}")]
    MissingSimilarities(String),
    #[error("invalid evaluation config: {0}")]
    Config(String),
}
