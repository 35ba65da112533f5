//! Sense inventories: headwords mapped to glossed and exemplified senses.
//!
//! Two dump schemas are understood. WordNet-like dumps list, per headword, the
//! synsets the headword participates in, each with a part of speech, a gloss,
//! example sentences and an optional marker telling whether the headword is the
//! synset's primary headword. Svensk-ordbok-like dumps list a word's main
//! definitions, each with a gloss, a secondary gloss, sub-entries, examples and
//! an attestation year.
//!
//! Both are normalised into [`SenseInventory`], which can be written to and read
//! back from a canonical line-delimited format (one headword entry per line).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::text::char_len;

const CANONICAL_FORMAT: &str = "sensegap-inventory";
const CANONICAL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("malformed record for headword {headword:?}: {reason}")]
    Malformed { headword: String, reason: String },
    #[error("headword {0:?} occurs more than once")]
    DuplicateHeadword(String),
    #[error("sense id {0} occurs more than once")]
    DuplicateSenseId(SenseId),
    #[error("headword entry {0:?} is invalid: {1}")]
    InvalidEntry(String, &'static str),
    #[error("document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("canonical inventory line {line}: {reason}")]
    Canonical { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, InventoryError>;

/// Opaque, deterministic sense identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SenseId(pub String);

impl SenseId {
    /// Content hash of `(headword, ordinal, gloss)`.
    ///
    /// `ordinal` is the sense's position label within its headword ("1", "2", or
    /// "1.1" for sub-entries), so reruns over the same dump yield the same ids.
    pub fn derive(headword: &str, ordinal: &str, gloss: Option<&str>) -> Self {
        let mut h = Sha256::new();
        for part in [headword, ordinal, gloss.unwrap_or("")] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        let digest = h.finalize();
        SenseId(hex::encode(&digest[..8]))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SenseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SenseId {
    fn from(s: &str) -> Self {
        SenseId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenseEntry {
    pub sense_id: SenseId,
    #[serde(default)]
    pub gloss: Option<String>,
    #[serde(default)]
    pub secondary_gloss: Option<String>,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub pos: Option<String>,
    /// The headword is the primary headword of this sense's synset.
    pub is_primary: bool,
    #[serde(default)]
    pub year: Option<String>,
    /// Shared synset identifier, when the same synset is listed under several headwords.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synset_id: Option<String>,
    /// Other lemmas of the synset; used to locate the target word in examples.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synset_members: Vec<String>,
}

impl SenseEntry {
    /// The gloss if present, else the secondary gloss.
    pub fn effective_gloss(&self) -> Option<&str> {
        self.gloss.as_deref().or(self.secondary_gloss.as_deref())
    }

    pub fn has_gloss(&self) -> bool {
        self.effective_gloss().is_some()
    }

    pub fn has_examples(&self) -> bool {
        !self.examples.is_empty()
    }

    pub fn is_complete(&self, kind: CompletenessKind) -> bool {
        match kind {
            CompletenessKind::Gloss => self.has_gloss(),
            CompletenessKind::Examples => self.has_examples(),
            CompletenessKind::Both => self.has_gloss() && self.has_examples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadwordEntry {
    pub headword: String,
    pub senses: Vec<SenseEntry>,
    /// Sense ids ordered from most to least frequent (WordNet only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense_frequency_rank: Option<Vec<SenseId>>,
    /// Sub-senses kept as metadata; not part of `senses` unless requested at parse time.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub_senses: Vec<SenseEntry>,
}

impl HeadwordEntry {
    fn validate(&self) -> Result<()> {
        if self.headword.trim().is_empty() {
            return Err(InventoryError::InvalidEntry(self.headword.clone(), "empty headword"));
        }
        if self.senses.is_empty() {
            return Err(InventoryError::InvalidEntry(self.headword.clone(), "no senses"));
        }
        Ok(())
    }

    /// The most frequent sense among those accepted by `keep`.
    pub fn most_frequent_sense<F>(&self, keep: F) -> Option<&SenseId>
    where
        F: Fn(&SenseId) -> bool,
    {
        self.sense_frequency_rank
            .as_ref()?
            .iter()
            .find(|id| keep(id))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    WordnetLike,
    SoLike,
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::WordnetLike => "wordnet_like",
            SourceTag::SoLike => "so_like",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SenseInventory {
    source_tag: SourceTag,
    headwords: BTreeMap<String, HeadwordEntry>,
    index: HashMap<SenseId, (String, usize)>,
}

impl SenseInventory {
    /// Builds an inventory, rejecting duplicate headwords, duplicate sense ids
    /// and entries without senses.
    pub fn new(source_tag: SourceTag, entries: impl IntoIterator<Item = HeadwordEntry>) -> Result<Self> {
        let mut headwords = BTreeMap::new();
        let mut index = HashMap::new();
        for entry in entries {
            entry.validate()?;
            for (i, s) in entry.senses.iter().enumerate() {
                if index
                    .insert(s.sense_id.clone(), (entry.headword.clone(), i))
                    .is_some()
                {
                    return Err(InventoryError::DuplicateSenseId(s.sense_id.clone()));
                }
            }
            let hw = entry.headword.clone();
            if headwords.insert(hw.clone(), entry).is_some() {
                return Err(InventoryError::DuplicateHeadword(hw));
            }
        }
        Ok(SenseInventory {
            source_tag,
            headwords,
            index,
        })
    }

    pub fn source_tag(&self) -> SourceTag {
        self.source_tag
    }

    pub fn len(&self) -> usize {
        self.headwords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headwords.is_empty()
    }

    pub fn get(&self, headword: &str) -> Option<&HeadwordEntry> {
        self.headwords.get(headword)
    }

    pub fn contains(&self, headword: &str) -> bool {
        self.headwords.contains_key(headword)
    }

    /// Headword entries in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = &HeadwordEntry> {
        self.headwords.values()
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> {
        self.headwords.keys().map(String::as_str)
    }

    pub fn sense(&self, id: &SenseId) -> Option<&SenseEntry> {
        let (hw, i) = self.index.get(id)?;
        self.headwords.get(hw).map(|e| &e.senses[*i])
    }

    /// Headword owning the sense.
    pub fn headword_of(&self, id: &SenseId) -> Option<&str> {
        self.index.get(id).map(|(hw, _)| hw.as_str())
    }

    pub fn sense_count(&self) -> usize {
        self.index.len()
    }

    /// Serialises to the canonical line-delimited format.
    pub fn to_canonical(&self) -> String {
        let header = serde_json::json!({
            "format": CANONICAL_FORMAT,
            "version": CANONICAL_VERSION,
            "source_tag": self.source_tag,
        });
        let mut out = header.to_string();
        out.push('\n');
        for entry in self.headwords.values() {
            // HeadwordEntry only holds strings, bools and vectors of them.
            out.push_str(&serde_json::to_string(entry).expect("serializable entry"));
            out.push('\n');
        }
        out
    }

    pub fn from_canonical(doc: &str) -> Result<Self> {
        let mut lines = doc.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| InventoryError::Canonical {
            line: 1,
            reason: "missing header".into(),
        })?;
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
            source_tag: SourceTag,
        }
        let header: Header = serde_json::from_str(header).map_err(|e| InventoryError::Canonical {
            line: 1,
            reason: e.to_string(),
        })?;
        if header.format != CANONICAL_FORMAT || header.version != CANONICAL_VERSION {
            return Err(InventoryError::Canonical {
                line: 1,
                reason: format!("unsupported format {} v{}", header.format, header.version),
            });
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            let entry: HeadwordEntry =
                serde_json::from_str(line).map_err(|e| InventoryError::Canonical {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
            entries.push(entry);
        }
        SenseInventory::new(header.source_tag, entries)
    }
}

/// Result of parsing a dump: the inventory plus non-fatal warnings.
#[derive(Clone, Debug)]
pub struct Parsed {
    pub inventory: SenseInventory,
    pub warnings: Vec<String>,
}

/// Splits a document into JSON records. Accepts a top-level array or a
/// stream of whitespace-separated objects (e.g. one per line).
fn records(raw: &str) -> Result<Vec<Value>> {
    let trimmed = raw.trim_start();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.starts_with('[') {
        match serde_json::from_str::<Value>(raw)? {
            Value::Array(items) => Ok(items),
            _ => unreachable!("document starting with '[' parsed as non-array"),
        }
    } else {
        serde_json::Deserializer::from_str(raw)
            .into_iter::<Value>()
            .map(|v| v.map_err(InventoryError::from))
            .collect()
    }
}

fn headword_hint(v: &Value, key: &str) -> String {
    v.get(key)
        .and_then(Value::as_str)
        .unwrap_or("<unknown>")
        .to_string()
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

#[derive(Deserialize)]
struct WordnetRecord {
    headword: String,
    entries: Vec<WordnetEntry>,
    /// Indices into `entries`, most frequent first.
    #[serde(default)]
    frequency_rank: Option<Vec<usize>>,
}

#[derive(Deserialize)]
struct WordnetEntry {
    #[serde(default)]
    pos: Option<String>,
    #[serde(default)]
    gloss: Option<String>,
    #[serde(default)]
    examples: Vec<String>,
    #[serde(default)]
    primary: Option<bool>,
    #[serde(default)]
    synset: Option<String>,
    #[serde(default)]
    members: Vec<String>,
}

/// Parses a WordNet-like dump (records with `headword` and `entries`).
pub fn parse_wordnet_dump(raw: &str) -> Result<Parsed> {
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut seen = BTreeMap::new();
    for value in records(raw)? {
        let hint = headword_hint(&value, "headword");
        let rec: WordnetRecord =
            serde_json::from_value(value).map_err(|e| InventoryError::Malformed {
                headword: hint.clone(),
                reason: e.to_string(),
            })?;
        if rec.headword.trim().is_empty() {
            return Err(InventoryError::Malformed {
                headword: hint,
                reason: "empty headword".into(),
            });
        }
        if seen.insert(rec.headword.clone(), ()).is_some() {
            return Err(InventoryError::DuplicateHeadword(rec.headword));
        }
        if rec.entries.is_empty() {
            let msg = format!("headword {:?} has no entries; skipped", rec.headword);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let senses: Vec<SenseEntry> = rec
            .entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                let gloss = non_empty(e.gloss);
                SenseEntry {
                    sense_id: SenseId::derive(&rec.headword, &(i + 1).to_string(), gloss.as_deref()),
                    gloss,
                    secondary_gloss: None,
                    examples: e.examples,
                    pos: e.pos,
                    is_primary: e.primary.unwrap_or(true),
                    year: None,
                    synset_id: e.synset,
                    synset_members: e.members,
                }
            })
            .collect();
        let rank = match rec.frequency_rank {
            Some(order) => {
                let mut ids = Vec::with_capacity(order.len());
                for i in order {
                    let s = senses.get(i).ok_or_else(|| InventoryError::Malformed {
                        headword: rec.headword.clone(),
                        reason: format!("frequency_rank index {i} out of range"),
                    })?;
                    ids.push(s.sense_id.clone());
                }
                ids
            }
            // WordNet lists senses by decreasing tagged frequency.
            None => senses.iter().map(|s| s.sense_id.clone()).collect(),
        };
        entries.push(HeadwordEntry {
            headword: rec.headword,
            senses,
            sense_frequency_rank: Some(rank),
            sub_senses: Vec::new(),
        });
    }
    Ok(Parsed {
        inventory: SenseInventory::new(SourceTag::WordnetLike, entries)?,
        warnings,
    })
}

#[derive(Deserialize)]
struct SoRecord {
    word: String,
    #[serde(default)]
    nature: Option<String>,
    definitions: Vec<SoDefinition>,
}

#[derive(Deserialize)]
struct SoDefinition {
    #[serde(default)]
    gloss: Option<String>,
    #[serde(default)]
    sub_gloss: Option<String>,
    #[serde(default)]
    sub_entries: Vec<SoDefinition>,
    #[serde(default)]
    examples: Vec<String>,
    #[serde(default)]
    year: Option<String>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SoOptions {
    /// Append sub-entries to the sense list instead of keeping them as metadata only.
    pub include_sub_entries: bool,
}

/// Parses a Svensk-ordbok-like dump with default options (main senses only).
pub fn parse_so_dump(raw: &str) -> Result<Parsed> {
    parse_so_dump_with(raw, SoOptions::default())
}

pub fn parse_so_dump_with(raw: &str, opts: SoOptions) -> Result<Parsed> {
    fn sense(word: &str, ordinal: String, pos: &Option<String>, d: SoDefinition) -> (SenseEntry, Vec<SoDefinition>) {
        let gloss = non_empty(d.gloss);
        let secondary_gloss = non_empty(d.sub_gloss);
        let id_gloss = gloss.as_deref().or(secondary_gloss.as_deref());
        let entry = SenseEntry {
            sense_id: SenseId::derive(word, &ordinal, id_gloss),
            gloss,
            secondary_gloss,
            examples: d.examples,
            pos: pos.clone(),
            is_primary: true,
            year: non_empty(d.year),
            synset_id: None,
            synset_members: Vec::new(),
        };
        (entry, d.sub_entries)
    }

    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut seen = BTreeMap::new();
    for value in records(raw)? {
        let hint = headword_hint(&value, "word");
        let rec: SoRecord = serde_json::from_value(value).map_err(|e| InventoryError::Malformed {
            headword: hint.clone(),
            reason: e.to_string(),
        })?;
        if rec.word.trim().is_empty() {
            return Err(InventoryError::Malformed {
                headword: hint,
                reason: "empty word".into(),
            });
        }
        if seen.insert(rec.word.clone(), ()).is_some() {
            return Err(InventoryError::DuplicateHeadword(rec.word));
        }
        if rec.definitions.is_empty() {
            let msg = format!("headword {:?} has no definitions; skipped", rec.word);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let mut senses = Vec::new();
        let mut sub_senses = Vec::new();
        for (i, d) in rec.definitions.into_iter().enumerate() {
            let (main, subs) = sense(&rec.word, (i + 1).to_string(), &rec.nature, d);
            senses.push(main);
            for (j, sd) in subs.into_iter().enumerate() {
                // Nested sub-entries below the first level are not kept.
                let (sub, _) = sense(&rec.word, format!("{}.{}", i + 1, j + 1), &rec.nature, sd);
                sub_senses.push(sub);
            }
        }
        if opts.include_sub_entries {
            senses.append(&mut sub_senses);
        }
        entries.push(HeadwordEntry {
            headword: rec.word,
            senses,
            sense_frequency_rank: None,
            sub_senses,
        });
    }
    Ok(Parsed {
        inventory: SenseInventory::new(SourceTag::SoLike, entries)?,
        warnings,
    })
}

/// Descriptive statistics of an inventory. Averages over empty denominators are `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub headwords: usize,
    pub senses: usize,
    pub avg_senses_per_headword: Option<f64>,
    pub avg_senses_per_multi_sense_headword: Option<f64>,
    pub pct_senses_with_gloss: Option<f64>,
    pub avg_gloss_length: Option<f64>,
    pub pct_senses_with_examples: Option<f64>,
    pub avg_examples_per_sense: Option<f64>,
    pub avg_examples_per_exemplified_sense: Option<f64>,
    pub avg_example_length: Option<f64>,
}

fn ratio(num: f64, den: usize) -> Option<f64> {
    (den > 0).then(|| num / den as f64)
}

pub fn inventory_stats(inv: &SenseInventory) -> StatsReport {
    let headwords = inv.len();
    let mut senses = 0usize;
    let (mut multi_hw, mut multi_senses) = (0usize, 0usize);
    let (mut glossed, mut gloss_chars) = (0usize, 0usize);
    let (mut exemplified, mut examples, mut example_chars) = (0usize, 0usize, 0usize);
    for entry in inv.entries() {
        let n = entry.senses.len();
        senses += n;
        if n > 1 {
            multi_hw += 1;
            multi_senses += n;
        }
        for s in &entry.senses {
            if let Some(g) = s.effective_gloss() {
                glossed += 1;
                gloss_chars += char_len(g);
            }
            if s.has_examples() {
                exemplified += 1;
            }
            examples += s.examples.len();
            example_chars += s.examples.iter().map(|e| char_len(e)).sum::<usize>();
        }
    }
    StatsReport {
        headwords,
        senses,
        avg_senses_per_headword: ratio(senses as f64, headwords),
        avg_senses_per_multi_sense_headword: ratio(multi_senses as f64, multi_hw),
        pct_senses_with_gloss: ratio(100.0 * glossed as f64, senses),
        avg_gloss_length: ratio(gloss_chars as f64, glossed),
        pct_senses_with_examples: ratio(100.0 * exemplified as f64, senses),
        avg_examples_per_sense: ratio(examples as f64, senses),
        avg_examples_per_exemplified_sense: ratio(examples as f64, exemplified),
        avg_example_length: ratio(example_chars as f64, examples),
    }
}

impl StatsReport {
    /// Flat `key=value` document; absent values are written as `absent`.
    pub fn to_key_value(&self) -> String {
        fn v(x: Option<f64>) -> String {
            x.map_or_else(|| "absent".to_string(), |x| format!("{x:.4}"))
        }
        [
            ("headwords", self.headwords.to_string()),
            ("senses", self.senses.to_string()),
            ("avg_senses_per_headword", v(self.avg_senses_per_headword)),
            ("avg_senses_per_multi_sense_headword", v(self.avg_senses_per_multi_sense_headword)),
            ("pct_senses_with_gloss", v(self.pct_senses_with_gloss)),
            ("avg_gloss_length_chars", v(self.avg_gloss_length)),
            ("pct_senses_with_examples", v(self.pct_senses_with_examples)),
            ("avg_examples_per_sense", v(self.avg_examples_per_sense)),
            ("avg_examples_per_exemplified_sense", v(self.avg_examples_per_exemplified_sense)),
            ("avg_example_length_chars", v(self.avg_example_length)),
        ]
        .iter()
        .map(|(k, v)| format!("{k}={v}\n"))
        .collect()
    }
}

/// Which part of a sense entry a representation relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletenessKind {
    Gloss,
    Examples,
    /// Both a gloss and at least one example. Used when one masking plan is
    /// shared by gloss and example models.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadwordStatus {
    Complete,
    Partial,
    Unrepresentable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeadwordCompleteness {
    /// Complete senses in inventory order.
    pub complete: Vec<SenseId>,
    /// Number of senses considered (after the primary filter).
    pub considered: usize,
    pub status: HeadwordStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessView {
    pub kind: CompletenessKind,
    pub primary_only: bool,
    pub headwords: BTreeMap<String, HeadwordCompleteness>,
}

impl CompletenessView {
    pub fn get(&self, headword: &str) -> Option<&HeadwordCompleteness> {
        self.headwords.get(headword)
    }

    pub fn complete(&self, headword: &str) -> &[SenseId] {
        self.headwords
            .get(headword)
            .map(|h| h.complete.as_slice())
            .unwrap_or(&[])
    }

    pub fn status(&self, headword: &str) -> Option<HeadwordStatus> {
        self.headwords.get(headword).map(|h| h.status)
    }

    /// `(complete, partial, unrepresentable)` headword counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.headwords.values().fold((0, 0, 0), |(c, p, u), h| match h.status {
            HeadwordStatus::Complete => (c + 1, p, u),
            HeadwordStatus::Partial => (c, p + 1, u),
            HeadwordStatus::Unrepresentable => (c, p, u + 1),
        })
    }
}

/// Complete senses per headword for a representation kind, over all senses.
pub fn complete_senses(inv: &SenseInventory, kind: CompletenessKind) -> CompletenessView {
    complete_senses_filtered(inv, kind, false)
}

/// As [`complete_senses`], optionally restricted to primary senses.
pub fn complete_senses_filtered(
    inv: &SenseInventory,
    kind: CompletenessKind,
    primary_only: bool,
) -> CompletenessView {
    let headwords = inv
        .entries()
        .map(|e| {
            let considered: Vec<&SenseEntry> = e
                .senses
                .iter()
                .filter(|s| !primary_only || s.is_primary)
                .collect();
            let complete: Vec<SenseId> = considered
                .iter()
                .filter(|s| s.is_complete(kind))
                .map(|s| s.sense_id.clone())
                .collect();
            let status = if complete.is_empty() {
                HeadwordStatus::Unrepresentable
            } else if complete.len() < considered.len() {
                HeadwordStatus::Partial
            } else {
                HeadwordStatus::Complete
            };
            (
                e.headword.clone(),
                HeadwordCompleteness {
                    complete,
                    considered: considered.len(),
                    status,
                },
            )
        })
        .collect();
    CompletenessView {
        kind,
        primary_only,
        headwords,
    }
}
