//! Repeated k-fold cross-validation over masked gold data.
//!
//! Each round draws a fresh masking plan, derives labels, shuffles the usages
//! into folds and, per fold, tunes the threshold on the other folds before
//! scoring the held-out one. Every random draw comes from a substream keyed by
//! `(rng_seed, round)` or `(rng_seed, round, fold)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::baselines::{assigned_share, frequency_baseline, random_baseline};
use super::masking::{build_masking_plan, derive_labels, GoldAssignment, MaskingPlan};
use super::metrics::{Confusion, Scores};
use super::sweep::{threshold_grid, threshold_sweep};
use super::EvalError;
use crate::detector::{classify, nearest_in_table, Label};
use crate::inventory::{CompletenessView, SenseId, SenseInventory};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Recall weight of the F-score.
    pub beta: f64,
    pub rounds: usize,
    pub folds: usize,
    #[serde(default = "threshold_grid")]
    pub threshold_grid: Vec<f64>,
    pub rng_seed: u64,
    /// Keep all usages of a headword in the same fold.
    #[serde(default)]
    pub group_by_headword: bool,
    /// Run the masking simulation; when false the gold labels are used as is.
    #[serde(default = "yes")]
    pub mask: bool,
}

fn yes() -> bool {
    true
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            beta: 0.3,
            rounds: 10,
            folds: 5,
            threshold_grid: threshold_grid(),
            rng_seed: 0,
            group_by_headword: false,
            mask: true,
        }
    }
}

impl EvalConfig {
    /// Recall weights offered as presets.
    pub const BETA_PRESETS: [f64; 3] = [0.1, 0.3, 0.5];

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.beta > 0.0) {
            return Err(EvalError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.rounds == 0 {
            return Err(EvalError::Config("rounds must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(EvalError::Config("folds must be at least 2".into()));
        }
        if self.threshold_grid.is_empty() {
            return Err(EvalError::Config("threshold grid is empty".into()));
        }
        Ok(())
    }
}

/// Similarities of one usage to the complete senses of its headword.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageSims {
    pub headword: String,
    pub sims: BTreeMap<SenseId, f64>,
}

/// usage id → similarities, for one model configuration.
pub type SimTable = BTreeMap<String, UsageSims>;

/// Nearest similarity among the senses left visible by `plan`;
/// `-∞` when none is visible.
pub fn visible_nearest(sims: &UsageSims, plan: &MaskingPlan) -> f64 {
    let Some(unmasked) = plan.unmasked(&sims.headword) else {
        return f64::NEG_INFINITY;
    };
    nearest_in_table(sims.sims.iter().filter(|(s, _)| unmasked.contains(*s)).map(|(s, v)| (s, *v)))
        .map_or(f64::NEG_INFINITY, |(_, v)| v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitScores {
    pub train: Scores,
    pub test: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub threshold: f64,
    pub train: Scores,
    pub test: Scores,
    pub random: SplitScores,
    pub frequency: Option<SplitScores>,
    pub train_size: usize,
    pub test_size: usize,
}

/// Means over folds; precision and recall average only the folds defining them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageRow {
    pub threshold: f64,
    pub train_precision: Option<f64>,
    pub train_recall: Option<f64>,
    pub train_f: f64,
    pub test_precision: Option<f64>,
    pub test_recall: Option<f64>,
    pub test_f: f64,
    pub random_train_f: f64,
    pub random_test_f: f64,
    pub frequency_train_f: Option<f64>,
    pub frequency_test_f: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub usages: usize,
    pub unassigned: usize,
    pub folds: Vec<FoldReport>,
    pub average: AverageRow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub beta: f64,
    pub rounds: Vec<RoundReport>,
    pub train_f: MeanStd,
    pub test_f: MeanStd,
    pub random_test_f: MeanStd,
    pub frequency_test_f: Option<MeanStd>,
    /// Mean tuned threshold over all rounds and folds.
    pub mean_threshold: f64,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn mean_opt(xs: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.into_iter().flatten().collect();
    (!v.is_empty()).then(|| mean(v))
}

fn average_row(folds: &[FoldReport]) -> AverageRow {
    let freq = folds.iter().all(|f| f.frequency.is_some());
    AverageRow {
        threshold: mean(folds.iter().map(|f| f.threshold)),
        train_precision: mean_opt(folds.iter().map(|f| f.train.precision)),
        train_recall: mean_opt(folds.iter().map(|f| f.train.recall)),
        train_f: mean(folds.iter().map(|f| f.train.f_beta)),
        test_precision: mean_opt(folds.iter().map(|f| f.test.precision)),
        test_recall: mean_opt(folds.iter().map(|f| f.test.recall)),
        test_f: mean(folds.iter().map(|f| f.test.f_beta)),
        random_train_f: mean(folds.iter().map(|f| f.random.train.f_beta)),
        random_test_f: mean(folds.iter().map(|f| f.random.test.f_beta)),
        frequency_train_f: freq.then(|| mean(folds.iter().filter_map(|f| f.frequency).map(|s| s.train.f_beta))),
        frequency_test_f: freq.then(|| mean(folds.iter().filter_map(|f| f.frequency).map(|s| s.test.f_beta))),
    }
}

/// Splits `ids` into `k` folds after a seeded shuffle. With `by_headword`, whole
/// headwords are dealt to the currently smallest fold.
pub fn split_folds(
    ids: &[String],
    headword_of: impl Fn(&str) -> String,
    k: usize,
    by_headword: bool,
    rng_seed: u64,
    round: u64,
) -> Vec<Vec<String>> {
    let mut rng = substream(rng_seed, "folds", &[round]);
    let mut folds = vec![Vec::new(); k];
    if by_headword {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for id in ids {
            groups.entry(headword_of(id)).or_default().push(id.clone());
        }
        let mut groups: Vec<Vec<String>> = groups.into_values().collect();
        groups.shuffle(&mut rng);
        for g in groups {
            let smallest = (0..k).min_by_key(|&i| folds[i].len()).expect("k > 0");
            folds[smallest].extend(g);
        }
    } else {
        let mut shuffled = ids.to_vec();
        shuffled.shuffle(&mut rng);
        for (i, id) in shuffled.into_iter().enumerate() {
            folds[i % k].push(id);
        }
    }
    folds
}

/// Repeated k-fold cross-validation of one model configuration.
///
/// `sims` must hold an entry for every gold usage whose headword has a
/// complete sense in `view`; `inv` supplies sense frequency ranks for the
/// frequency baseline.
pub fn run_cross_validation(
    sims: &SimTable,
    gold: &GoldAssignment,
    view: &CompletenessView,
    inv: &SenseInventory,
    cfg: &EvalConfig,
) -> Result<CvReport, EvalError> {
    cfg.validate()?;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let plan = if cfg.mask {
            build_masking_plan(gold, view, cfg.rng_seed, round as u64)
        } else {
            MaskingPlan::identity(gold, view)
        };
        rounds.push(run_round(sims, gold, inv, &plan, cfg, round)?);
    }

    let test: Vec<f64> = rounds.iter().map(|r| r.average.test_f).collect();
    let train: Vec<f64> = rounds.iter().map(|r| r.average.train_f).collect();
    let random: Vec<f64> = rounds.iter().map(|r| r.average.random_test_f).collect();
    let freq: Option<Vec<f64>> = rounds.iter().map(|r| r.average.frequency_test_f).collect();
    Ok(CvReport {
        beta: cfg.beta,
        train_f: MeanStd::of(&train),
        test_f: MeanStd::of(&test),
        random_test_f: MeanStd::of(&random),
        frequency_test_f: freq.map(|f| MeanStd::of(&f)),
        mean_threshold: mean(rounds.iter().flat_map(|r| r.folds.iter().map(|f| f.threshold))),
        rounds,
    })
}

/// One round under a given plan.
pub fn run_round(
    sims: &SimTable,
    gold: &GoldAssignment,
    inv: &SenseInventory,
    plan: &MaskingPlan,
    cfg: &EvalConfig,
    round: usize,
) -> Result<RoundReport, EvalError> {
    let labels = derive_labels(gold, plan);
    let mut nearest = BTreeMap::new();
    for id in labels.keys() {
        let s = sims.get(id).ok_or_else(|| EvalError::MissingSimilarities(id.clone()))?;
        nearest.insert(id.as_str(), visible_nearest(s, plan));
    }
    let frequency = frequency_baseline(gold, inv, plan);

    let ids: Vec<String> = labels.keys().cloned().collect();
    let folds = split_folds(
        &ids,
        |id| gold.usages[id].headword.clone(),
        cfg.folds,
        cfg.group_by_headword,
        cfg.rng_seed,
        round as u64,
    );
    if let Some(fold) = folds.iter().position(Vec::is_empty) {
        return Err(EvalError::EmptyFold {
            round,
            fold,
            folds: cfg.folds,
        });
    }

    let mut reports = Vec::with_capacity(cfg.folds);
    for (k, test_ids) in folds.iter().enumerate() {
        let test_set: BTreeSet<&str> = test_ids.iter().map(String::as_str).collect();
        let train_ids: Vec<&str> = ids.iter().map(String::as_str).filter(|id| !test_set.contains(id)).collect();
        let test_ids: Vec<&str> = ids.iter().map(String::as_str).filter(|id| test_set.contains(id)).collect();
        let records = |set: &[&str]| -> Vec<(f64, Label)> { set.iter().map(|id| (nearest[id], labels[*id])).collect() };
        let (train_recs, test_recs) = (records(&train_ids), records(&test_ids));

        let sweep = threshold_sweep(&train_recs, cfg.beta, &cfg.threshold_grid);
        let test_conf = Confusion::tally(test_recs.iter().map(|&(s, g)| (classify(s, sweep.threshold), g)));

        let p_assigned = assigned_share(&train_recs.iter().map(|r| r.1).collect::<Vec<_>>());
        let mut rng = substream(cfg.rng_seed, "random-baseline", &[round as u64, k as u64]);
        let rand_train = random_baseline(train_recs.len(), p_assigned, &mut rng);
        let rand_test = random_baseline(test_recs.len(), p_assigned, &mut rng);
        let score = |preds: &[Label], recs: &[(f64, Label)]| {
            Scores::from_confusion(&Confusion::tally(preds.iter().copied().zip(recs.iter().map(|r| r.1))), cfg.beta)
        };
        let random = SplitScores {
            train: score(&rand_train, &train_recs),
            test: score(&rand_test, &test_recs),
        };
        let freq = frequency.as_ref().map(|fp| {
            let preds = |set: &[&str]| -> Vec<Label> { set.iter().map(|id| fp[*id]).collect() };
            SplitScores {
                train: score(&preds(&train_ids), &train_recs),
                test: score(&preds(&test_ids), &test_recs),
            }
        });

        reports.push(FoldReport {
            fold: k,
            threshold: sweep.threshold,
            train: sweep.scores,
            test: Scores::from_confusion(&test_conf, cfg.beta),
            random,
            frequency: freq,
            train_size: train_recs.len(),
            test_size: test_recs.len(),
        });
    }
    Ok(RoundReport {
        round,
        usages: ids.len(),
        unassigned: labels.values().filter(|&&l| l == Label::Unassigned).count(),
        average: average_row(&reports),
        folds: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_ids() {
        let ids: Vec<String> = (0..23).map(|i| format!("u{i:02}")).collect();
        for by_hw in [false, true] {
            let folds = split_folds(&ids, |id| id[..2].to_string(), 5, by_hw, 9, 1);
            let mut all: Vec<String> = folds.concat();
            all.sort();
            assert_eq!(all, ids);
            if !by_hw {
                assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
            }
        }
    }

    #[test]
    fn grouped_folds_keep_headwords_together() {
        let ids: Vec<String> = (0..30).map(|i| format!("{}-{i}", i % 6)).collect();
        let hw = |id: &str| id.split('-').next().unwrap().to_string();
        let folds = split_folds(&ids, hw, 3, true, 4, 0);
        for f in &folds {
            for g in f {
                for (j, other) in folds.iter().enumerate() {
                    if !std::ptr::eq(f, other) {
                        assert!(other.iter().all(|o| hw(o) != hw(g)), "fold {j} shares a headword");
                    }
                }
            }
        }
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(MeanStd::of(&[0.5]).std, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::default().validate().is_ok());
        assert!(EvalConfig { folds: 1, ..Default::default() }.validate().is_err());
        assert!(EvalConfig { beta: 0.0, ..Default::default() }.validate().is_err());
        assert_eq!(EvalConfig::default().threshold_grid.len(), 101);
    }
}
