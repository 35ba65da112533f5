//! Similarity measures, threshold classification and candidate selection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::inventory::{CompletenessView, HeadwordStatus, SenseId};
use crate::representation::{EmbeddingVector, Similarity};

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("similarity undefined for an all-zero vector")]
    ZeroVector,
    #[error("rank correlation undefined for a constant vector")]
    ConstantVector,
    #[error("rank correlation needs at least two components")]
    TooShort,
}

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("headword has no complete sense to compare against")]
    Unrepresentable,
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

fn check_dims(a: &[f32], b: &[f32]) -> Result<(), SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Cosine similarity, computed in `f64`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, SimilarityError> {
    check_dims(a, b)?;
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn average_ranks(x: &[f32]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0f64; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of the average ranks.
pub fn spearman(a: &[f32], b: &[f32]) -> Result<f64, SimilarityError> {
    check_dims(a, b)?;
    if a.len() < 2 {
        return Err(SimilarityError::TooShort);
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let has_ties = |r: &[f64]| r.iter().any(|x| x.fract() != 0.0) || {
        let mut s = r.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).any(|w| w[0] == w[1])
    };
    if !has_ties(&ra) && !has_ties(&rb) {
        // distinct ranks: 1 - 6·Σd² / (n(n² - 1)), exact for small integers
        let n = a.len() as f64;
        let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
        return Ok((1.0 - 6.0 * d2 / (n * (n * n - 1.0))).clamp(-1.0, 1.0));
    }
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut va, mut vb) = (0f64, 0f64, 0f64);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(SimilarityError::ConstantVector);
    }
    Ok((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

pub fn similarity(kind: Similarity, a: &[f32], b: &[f32]) -> Result<f64, SimilarityError> {
    match kind {
        Similarity::Cos => cosine(a, b),
        Similarity::Spr => spearman(a, b),
    }
}

/// The most similar sense; ties go to the smallest sense id.
pub fn nearest_sense(
    usage: &EmbeddingVector,
    senses: &BTreeMap<SenseId, EmbeddingVector>,
    kind: Similarity,
) -> Result<(SenseId, f64), DetectError> {
    let mut best: Option<(&SenseId, f64)> = None;
    for (id, v) in senses {
        let s = similarity(kind, usage.as_slice(), v.as_slice())?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    best.map(|(id, s)| (id.clone(), s))
        .ok_or(DetectError::Unrepresentable)
}

/// Same as [`nearest_sense`] over precomputed similarities.
pub fn nearest_in_table<'a, I>(sims: I) -> Option<(&'a SenseId, f64)>
where
    I: IntoIterator<Item = (&'a SenseId, f64)>,
{
    let mut best: Option<(&SenseId, f64)> = None;
    for (id, s) in sims {
        let better = match best {
            None => true,
            Some((bid, b)) => s > b || (s == b && id < bid),
        };
        if better {
            best = Some((id, s));
        }
    }
    best
}

/// Whether a usage is covered by a recorded sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Assigned,
    Unassigned,
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::Assigned => 0,
            Label::Unassigned => 1,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Label::Assigned),
            1 => Ok(Label::Unassigned),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

/// Unassigned iff the similarity is strictly below the threshold.
pub fn classify(nearest_similarity: f64, threshold: f64) -> Label {
    if nearest_similarity < threshold {
        Label::Unassigned
    } else {
        Label::Assigned
    }
}

fn six_decimals<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&((v * 1e6).round() / 1e6)),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub usage_id: String,
    pub headword: String,
    pub nearest_sense_id: Option<SenseId>,
    /// `None` for usages of unrepresentable headwords.
    #[serde(serialize_with = "six_decimals")]
    pub nearest_similarity: Option<f64>,
    pub label: Label,
    /// The headword had no complete sense under the active mode.
    #[serde(default)]
    pub unrepresentable: bool,
}

impl PredictionRecord {
    /// Classifies a usage from its nearest sense, if any.
    pub fn new(
        usage_id: impl Into<String>,
        headword: impl Into<String>,
        nearest: Option<(SenseId, f64)>,
        threshold: f64,
    ) -> Self {
        let (usage_id, headword) = (usage_id.into(), headword.into());
        match nearest {
            Some((id, sim)) => PredictionRecord {
                usage_id,
                headword,
                nearest_sense_id: Some(id),
                nearest_similarity: Some(sim),
                label: classify(sim, threshold),
                unrepresentable: false,
            },
            None => PredictionRecord {
                usage_id,
                headword,
                nearest_sense_id: None,
                nearest_similarity: None,
                label: Label::Unassigned,
                unrepresentable: true,
            },
        }
    }

    /// Similarity used for ordering; unrepresentable usages sort first.
    pub fn sort_key(&self) -> f64 {
        self.nearest_similarity.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Predicts one usage against the senses of its headword.
pub fn predict(
    usage_id: &str,
    headword: &str,
    usage: &EmbeddingVector,
    senses: &BTreeMap<SenseId, EmbeddingVector>,
    kind: Similarity,
    threshold: f64,
) -> Result<PredictionRecord, SimilarityError> {
    let nearest = match nearest_sense(usage, senses, kind) {
        Ok(n) => Some(n),
        Err(DetectError::Unrepresentable) => None,
        Err(DetectError::Similarity(e)) => return Err(e),
    };
    Ok(PredictionRecord::new(usage_id, headword, nearest, threshold))
}

/// Candidates for annotation: unassigned predictions of fully represented
/// headwords, least similar first, at most `max_per_headword` per headword,
/// `sample_size` in total. The cap is applied while scanning the sorted list.
pub fn rank_and_select(
    preds: &[PredictionRecord],
    view: &CompletenessView,
    max_per_headword: usize,
    sample_size: usize,
) -> Vec<PredictionRecord> {
    let mut eligible: Vec<&PredictionRecord> = preds
        .iter()
        .filter(|p| {
            p.label == Label::Unassigned
                && !p.unrepresentable
                && view.status(&p.headword) == Some(HeadwordStatus::Complete)
        })
        .collect();
    eligible.sort_by(|a, b| {
        a.sort_key()
            .partial_cmp(&b.sort_key())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.usage_id.cmp(&b.usage_id))
    });
    let mut per_headword: HashMap<&str, usize> = HashMap::new();
    let mut out = Vec::new();
    for p in eligible {
        if out.len() >= sample_size {
            break;
        }
        let n = per_headword.entry(p.headword.as_str()).or_default();
        if *n < max_per_headword {
            *n += 1;
            out.push(p.clone());
        }
    }
    out
}

/// A selected candidate with the context an annotator needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(flatten)]
    pub prediction: PredictionRecord,
    pub sentence: String,
    pub start: usize,
    pub end: usize,
    pub glosses: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{complete_senses, parse_wordnet_dump, CompletenessKind};

    fn v(x: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() - 10.0 / 14.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]), Err(SimilarityError::ZeroVector));
        assert_eq!(cosine(&[1.0], &[1.0, 1.0]), Err(SimilarityError::DimMismatch(1, 2)));
        assert!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() < 0.0);
    }

    #[test]
    fn spearman_cases() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(), 0.8);
        assert!((spearman(&[1.0, 5.0, 2.0], &[10.0, 50.0, 20.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(SimilarityError::ConstantVector));
        assert_eq!(spearman(&[1.0], &[1.0]), Err(SimilarityError::TooShort));
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn nearest_sense_cases() {
        let u = v(&[1.0, 0.0]);
        let mut senses = BTreeMap::new();
        senses.insert(SenseId::from("a"), v(&[0.3, (1.0f32 - 0.09).sqrt()]));
        let (id, s) = nearest_sense(&u, &senses, Similarity::Cos).unwrap();
        assert_eq!(id.as_str(), "a");
        assert!((s - 0.3).abs() < 1e-6);
        senses.insert(SenseId::from("b"), v(&[0.9, (1.0f32 - 0.81).sqrt()]));
        let (id, s) = nearest_sense(&u, &senses, Similarity::Cos).unwrap();
        assert_eq!(id.as_str(), "b");
        assert!((s - 0.9).abs() < 1e-6);
        // tie → smallest id
        senses.insert(SenseId::from("0"), v(&[0.9, (1.0f32 - 0.81).sqrt()]));
        assert_eq!(nearest_sense(&u, &senses, Similarity::Cos).unwrap().0.as_str(), "0");
        assert_eq!(
            nearest_sense(&u, &BTreeMap::new(), Similarity::Cos),
            Err(DetectError::Unrepresentable)
        );
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(classify(0.35, 0.396), Label::Unassigned);
        assert_eq!(classify(0.396, 0.396), Label::Assigned);
        assert_eq!(classify(0.0, 0.0), Label::Assigned);
        assert_eq!(classify(-0.2, 0.0), Label::Unassigned);
        assert_eq!(classify(-0.2, 0.01), Label::Unassigned);
    }

    #[test]
    fn unrepresentable_prediction() {
        let p = predict("u", "h", &v(&[1.0, 0.0]), &BTreeMap::new(), Similarity::Cos, 0.5).unwrap();
        assert!(p.unrepresentable);
        assert_eq!(p.label, Label::Unassigned);
    }

    #[test]
    fn prediction_serialises_six_decimals() {
        let p = PredictionRecord::new("u1", "car", Some((SenseId::from("s"), 0.123456789)), 0.5);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"nearest_similarity\":0.123457"), "{json}");
        assert!(json.contains("\"label\":1"));
        let back: PredictionRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.label, Label::Unassigned);
    }

    fn view() -> CompletenessView {
        let doc = r#"{"headword":"a","entries":[{"gloss":"x","examples":["a"]}]}
                     {"headword":"b","entries":[{"gloss":"x","examples":["b"]}]}
                     {"headword":"p","entries":[{"gloss":"x","examples":["p"]},{"gloss":"y"}]}"#;
        complete_senses(&parse_wordnet_dump(doc).unwrap().inventory, CompletenessKind::Examples)
    }

    fn rec(id: &str, hw: &str, sim: f64, t: f64) -> PredictionRecord {
        PredictionRecord::new(id, hw, Some((SenseId::from("s"), sim)), t)
    }

    #[test]
    fn selection_caps_per_headword() {
        let preds: Vec<_> = (0..10).map(|i| rec(&format!("u{i}"), "a", i as f64 / 100.0, 0.5)).collect();
        let out = rank_and_select(&preds, &view(), 8, 100);
        assert_eq!(out.len(), 8);
        assert_eq!(out[0].usage_id, "u0");
    }

    #[test]
    fn selection_drops_assigned_and_partial() {
        let preds = vec![rec("1", "a", 0.9, 0.5), rec("2", "p", 0.1, 0.5), rec("3", "b", 0.2, 0.5)];
        let out = rank_and_select(&preds, &view(), 8, 10);
        assert_eq!(out.iter().map(|p| p.usage_id.as_str()).collect::<Vec<_>>(), ["3"]);
        let all_assigned = vec![rec("1", "a", 0.9, 0.5)];
        assert!(rank_and_select(&all_assigned, &view(), 8, 10).is_empty());
    }
}
