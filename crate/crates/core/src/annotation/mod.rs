//! Annotation instances, judgment aggregation and agreement.
//!
//! Every usage is paired with every eligible sense of its headword. Annotators
//! judge whether the candidate gloss fits (`1`), does not fit (`0`) or cannot
//! be decided (`-`). Judgments are aggregated per instance by strict majority
//! after dropping `-`, then per usage: a usage is assigned iff some instance
//! has majority `1`.

pub mod agreement;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agreement::{krippendorff_alpha, AlphaResult};

use crate::corpus::{CorpusTag, Usage};
use crate::evaluation::GoldAssignment;
use crate::inventory::{SenseEntry, SenseId, SenseInventory};
use crate::rng::substream;
use crate::text;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: invalid judgment label {label:?} (expected 0, 1 or -)")]
    BadLabel { line: u64, label: String },
    #[error("annotator {annotator} judged instance {instance} more than once")]
    DuplicateJudgment { instance: String, annotator: String },
    #[error("agreement needs at least two annotators, found {0}")]
    TooFewAnnotators(usize),
}

/// Target-word markers used in exported sentences.
pub const MARK_OPEN: &str = "**";
pub const MARK_CLOSE: &str = "**";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationInstance {
    pub instance_id: String,
    pub usage_id: String,
    pub headword: String,
    pub sense_id: SenseId,
    pub corpus_tag: CorpusTag,
    /// Sentence with the target word wrapped in [`MARK_OPEN`]/[`MARK_CLOSE`].
    pub usage: String,
    pub gloss: String,
    /// Glosses of all eligible senses, one per line.
    pub all_glosses: String,
}

impl AnnotationInstance {
    pub fn glosses(&self) -> impl Iterator<Item = &str> {
        self.all_glosses.lines()
    }
}

/// Text shown for a sense: its effective gloss, or its examples when it has none.
pub fn display_gloss(sense: &SenseEntry) -> String {
    match sense.effective_gloss() {
        Some(g) => g.to_string(),
        None => format!("e.g. {}", sense.examples.join(" / ")),
    }
}

fn mark_target(u: &Usage) -> String {
    match text::slice(&u.sentence, u.span) {
        Some(t) => {
            let before = text::slice(&u.sentence, text::Span::new(0, u.span.start)).unwrap_or("");
            let after = text::slice(&u.sentence, text::Span::new(u.span.end, text::char_len(&u.sentence)))
                .unwrap_or("");
            format!("{before}{MARK_OPEN}{t}{MARK_CLOSE}{after}")
        }
        None => u.sentence.clone(),
    }
}

/// One instance per (usage, eligible sense). With `primary_only`, only senses
/// whose synset has the headword as primary headword are eligible.
pub fn generate_instances(usages: &[Usage], inv: &SenseInventory, primary_only: bool) -> Vec<AnnotationInstance> {
    let mut out = Vec::new();
    for u in usages {
        let Some(entry) = inv.get(&u.headword) else {
            warn!("usage {}: headword {:?} not in inventory; skipped", u.usage_id, u.headword);
            continue;
        };
        let eligible: Vec<&SenseEntry> = entry.senses.iter().filter(|s| !primary_only || s.is_primary).collect();
        let all_glosses = eligible.iter().map(|s| display_gloss(s)).collect::<Vec<_>>().join("\n");
        let usage = mark_target(u);
        for s in eligible {
            out.push(AnnotationInstance {
                instance_id: format!("{}#{}", u.usage_id, s.sense_id),
                usage_id: u.usage_id.clone(),
                headword: u.headword.clone(),
                sense_id: s.sense_id.clone(),
                corpus_tag: u.corpus_tag,
                usage: usage.clone(),
                gloss: display_gloss(s),
                all_glosses: all_glosses.clone(),
            });
        }
    }
    out
}

/// Seeded presentation order.
pub fn shuffle_instances(instances: &mut [AnnotationInstance], rng_seed: u64) {
    instances.shuffle(&mut substream(rng_seed, "instance-order", &[]));
}

const INSTANCE_COLUMNS: [&str; 8] =
    ["instance_id", "usage_id", "headword", "sense_id", "corpus_tag", "usage", "gloss", "all_glosses"];

/// Tab-separated with a header line, also when there are no instances.
pub fn write_instances<W: Write>(w: W, instances: &[AnnotationInstance]) -> Result<(), AnnotationError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    if instances.is_empty() {
        wtr.write_record(INSTANCE_COLUMNS)?;
    }
    for i in instances {
        wtr.serialize(i)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_instances<R: Read>(r: R) -> Result<Vec<AnnotationInstance>, AnnotationError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(r);
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JudgmentLabel {
    DoesNotFit,
    Fits,
    CannotDecide,
}

impl FromStr for JudgmentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(JudgmentLabel::DoesNotFit),
            "1" => Ok(JudgmentLabel::Fits),
            "-" | "−" => Ok(JudgmentLabel::CannotDecide),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for JudgmentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JudgmentLabel::DoesNotFit => "0",
            JudgmentLabel::Fits => "1",
            JudgmentLabel::CannotDecide => "-",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub instance_id: String,
    pub annotator_id: String,
    pub label: JudgmentLabel,
    pub comment: Option<String>,
}

#[derive(Deserialize)]
struct JudgmentRow {
    instance_id: String,
    annotator_id: String,
    label: String,
    #[serde(default)]
    comment: Option<String>,
}

/// Reads tab-separated `instance_id, annotator_id, label, comment` rows with a
/// header line. Duplicate (instance, annotator) pairs are rejected.
pub fn read_judgments<R: Read>(r: R) -> Result<Vec<Judgment>, AnnotationError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').flexible(true).from_reader(r);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for row in rdr.deserialize::<JudgmentRow>() {
        let row = row?;
        let line = out.len() as u64 + 2;
        let label = row
            .label
            .parse()
            .map_err(|label| AnnotationError::BadLabel { line, label })?;
        if !seen.insert((row.instance_id.clone(), row.annotator_id.clone())) {
            return Err(AnnotationError::DuplicateJudgment {
                instance: row.instance_id,
                annotator: row.annotator_id,
            });
        }
        out.push(Judgment {
            instance_id: row.instance_id,
            annotator_id: row.annotator_id,
            label,
            comment: row.comment.filter(|c| !c.is_empty()),
        });
    }
    Ok(out)
}

pub fn write_judgments<W: Write>(w: W, judgments: &[Judgment]) -> Result<(), AnnotationError> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    wtr.write_record(["instance_id", "annotator_id", "label", "comment"])?;
    for j in judgments {
        let label = j.label.to_string();
        wtr.write_record([
            j.instance_id.as_str(),
            j.annotator_id.as_str(),
            label.as_str(),
            j.comment.as_deref().unwrap_or(""),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceMajority {
    DoesNotFit,
    Fits,
    Excluded,
}

/// Strict majority after removing `-`; ties and empty remainders are excluded.
pub fn aggregate_majority(labels: &[JudgmentLabel]) -> InstanceMajority {
    let ones = labels.iter().filter(|&&l| l == JudgmentLabel::Fits).count();
    let zeros = labels.iter().filter(|&&l| l == JudgmentLabel::DoesNotFit).count();
    match ones.cmp(&zeros) {
        std::cmp::Ordering::Greater => InstanceMajority::Fits,
        std::cmp::Ordering::Less => InstanceMajority::DoesNotFit,
        std::cmp::Ordering::Equal => InstanceMajority::Excluded,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageStatus {
    Assigned,
    Unassigned,
    Excluded,
}

/// Assigned iff some instance has majority `1`; unassigned iff every
/// non-excluded instance has majority `0`; excluded when nothing remains.
pub fn usage_assignment(majorities: &[InstanceMajority]) -> UsageStatus {
    if majorities.contains(&InstanceMajority::Fits) {
        UsageStatus::Assigned
    } else if majorities.contains(&InstanceMajority::DoesNotFit) {
        UsageStatus::Unassigned
    } else {
        UsageStatus::Excluded
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Aggregation {
    pub instance_majority: BTreeMap<String, InstanceMajority>,
    pub usage_status: BTreeMap<String, UsageStatus>,
    /// Instance ids in judgments that match no known instance.
    pub unknown_instances: Vec<String>,
}

/// Aggregates judgments over known instances. Instances without judgments
/// count as excluded.
pub fn aggregate(instances: &[AnnotationInstance], judgments: &[Judgment]) -> Aggregation {
    let known: BTreeSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
    let mut by_instance: BTreeMap<&str, Vec<JudgmentLabel>> = BTreeMap::new();
    let mut unknown = BTreeSet::new();
    for j in judgments {
        if known.contains(j.instance_id.as_str()) {
            by_instance.entry(j.instance_id.as_str()).or_default().push(j.label);
        } else {
            unknown.insert(j.instance_id.clone());
        }
    }
    let mut agg = Aggregation {
        unknown_instances: unknown.into_iter().collect(),
        ..Default::default()
    };
    let mut per_usage: BTreeMap<&str, Vec<InstanceMajority>> = BTreeMap::new();
    for inst in instances {
        let m = by_instance
            .get(inst.instance_id.as_str())
            .map_or(InstanceMajority::Excluded, |ls| aggregate_majority(ls));
        agg.instance_majority.insert(inst.instance_id.clone(), m);
        per_usage.entry(inst.usage_id.as_str()).or_default().push(m);
    }
    agg.usage_status = per_usage
        .into_iter()
        .map(|(u, ms)| (u.to_string(), usage_assignment(&ms)))
        .collect();
    agg
}

/// Gold sense assignments of the non-excluded usages: the senses whose
/// instances have majority `1`.
pub fn gold_from_aggregation(instances: &[AnnotationInstance], agg: &Aggregation) -> GoldAssignment {
    let mut gold = GoldAssignment::default();
    for inst in instances {
        if agg.usage_status.get(&inst.usage_id) == Some(&UsageStatus::Excluded) {
            continue;
        }
        let entry = gold
            .usages
            .entry(inst.usage_id.clone())
            .or_insert_with(|| crate::evaluation::GoldUsage {
                headword: inst.headword.clone(),
                senses: BTreeSet::new(),
            });
        if agg.instance_majority.get(&inst.instance_id) == Some(&InstanceMajority::Fits) {
            entry.senses.insert(inst.sense_id.clone());
        }
    }
    gold
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSummary {
    pub instances: usize,
    pub judgments_fits: usize,
    pub judgments_does_not_fit: usize,
    pub judgments_cannot_decide: usize,
    pub excluded_instances: usize,
    pub usages: usize,
    pub excluded_usages: usize,
    pub remaining_usages: usize,
    pub assigned: usize,
    pub unassigned: usize,
    /// Share of unassigned among remaining usages, in percent.
    pub unassigned_pct: Option<f64>,
}

/// Counts over the instances accepted by `keep`.
pub fn summarize<F>(instances: &[AnnotationInstance], judgments: &[Judgment], agg: &Aggregation, keep: F) -> AnnotationSummary
where
    F: Fn(&AnnotationInstance) -> bool,
{
    let selected: Vec<&AnnotationInstance> = instances.iter().filter(|i| keep(i)).collect();
    let ids: BTreeSet<&str> = selected.iter().map(|i| i.instance_id.as_str()).collect();
    let usages: BTreeSet<&str> = selected.iter().map(|i| i.usage_id.as_str()).collect();
    let mut s = AnnotationSummary {
        instances: selected.len(),
        usages: usages.len(),
        ..Default::default()
    };
    for j in judgments.iter().filter(|j| ids.contains(j.instance_id.as_str())) {
        match j.label {
            JudgmentLabel::Fits => s.judgments_fits += 1,
            JudgmentLabel::DoesNotFit => s.judgments_does_not_fit += 1,
            JudgmentLabel::CannotDecide => s.judgments_cannot_decide += 1,
        }
    }
    s.excluded_instances = ids
        .iter()
        .filter(|id| agg.instance_majority.get(**id) == Some(&InstanceMajority::Excluded))
        .count();
    for u in &usages {
        match agg.usage_status.get(*u) {
            Some(UsageStatus::Assigned) => s.assigned += 1,
            Some(UsageStatus::Unassigned) => s.unassigned += 1,
            _ => s.excluded_usages += 1,
        }
    }
    s.remaining_usages = s.assigned + s.unassigned;
    s.unassigned_pct = (s.remaining_usages > 0).then(|| 100.0 * s.unassigned as f64 / s.remaining_usages as f64);
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementTable {
    pub annotators: Vec<String>,
    pub pairwise: Vec<(String, String, AlphaResult)>,
    pub full: AlphaResult,
}

/// Alpha over all annotators and for every annotator pair, restricted to
/// instances accepted by `keep`. `-` judgments are removed first.
pub fn agreement<F>(judgments: &[Judgment], keep: F) -> Result<AgreementTable, AnnotationError>
where
    F: Fn(&str) -> bool,
{
    let mut by_instance: BTreeMap<&str, BTreeMap<&str, u8>> = BTreeMap::new();
    let mut annotators = BTreeSet::new();
    for j in judgments.iter().filter(|j| keep(&j.instance_id)) {
        annotators.insert(j.annotator_id.clone());
        let v = match j.label {
            JudgmentLabel::Fits => 1,
            JudgmentLabel::DoesNotFit => 0,
            JudgmentLabel::CannotDecide => continue,
        };
        by_instance.entry(j.instance_id.as_str()).or_default().insert(j.annotator_id.as_str(), v);
    }
    let annotators: Vec<String> = annotators.into_iter().collect();
    if annotators.len() < 2 {
        return Err(AnnotationError::TooFewAnnotators(annotators.len()));
    }
    let units = |filter: &dyn Fn(&str) -> bool| -> Vec<Vec<u8>> {
        by_instance
            .values()
            .map(|m| m.iter().filter(|(a, _)| filter(a)).map(|(_, v)| *v).collect())
            .collect()
    };
    let full = krippendorff_alpha(&units(&|_| true));
    let mut pairwise = Vec::new();
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            let r = krippendorff_alpha(&units(&|x| x == a || x == b));
            pairwise.push((a.clone(), b.clone(), r));
        }
    }
    Ok(AgreementTable {
        annotators,
        pairwise,
        full,
    })
}
