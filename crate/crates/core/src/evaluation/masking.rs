//! Gold sense assignments and the masking simulation built on them.
//!
//! Few annotated usages are naturally unassigned, so unknown senses are
//! simulated: per headword one complete sense stays visible and the others are
//! hidden. A usage whose gold senses are all hidden becomes unassigned.

use std::collections::{BTreeMap, BTreeSet};

use log::info;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::detector::Label;
use crate::inventory::{CompletenessView, SenseId, SenseInventory};
use crate::rng::substream;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldUsage {
    pub headword: String,
    /// Senses judged fitting; empty for naturally unassigned usages.
    pub senses: BTreeSet<SenseId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAssignment {
    pub usages: BTreeMap<String, GoldUsage>,
}

/// One line of a gold file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub usage_id: String,
    pub headword: String,
    pub senses: Vec<SenseId>,
}

impl GoldAssignment {
    pub fn insert(&mut self, usage_id: impl Into<String>, headword: impl Into<String>, senses: impl IntoIterator<Item = SenseId>) {
        self.usages.insert(
            usage_id.into(),
            GoldUsage {
                headword: headword.into(),
                senses: senses.into_iter().collect(),
            },
        );
    }

    pub fn len(&self) -> usize {
        self.usages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.usages.is_empty()
    }

    /// Every referenced sense must belong to the usage's headword.
    pub fn validate(&self, inv: &SenseInventory) -> Result<(), EvalError> {
        for (usage, g) in &self.usages {
            for s in &g.senses {
                if inv.headword_of(s) != Some(g.headword.as_str()) {
                    return Err(EvalError::UnknownSense {
                        usage: usage.clone(),
                        sense: s.clone(),
                        headword: g.headword.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn records(&self) -> Vec<GoldRecord> {
        self.usages
            .iter()
            .map(|(id, g)| GoldRecord {
                usage_id: id.clone(),
                headword: g.headword.clone(),
                senses: g.senses.iter().cloned().collect(),
            })
            .collect()
    }

    pub fn from_records(records: impl IntoIterator<Item = GoldRecord>) -> Self {
        let mut g = GoldAssignment::default();
        for r in records {
            g.insert(r.usage_id, r.headword, r.senses);
        }
        g
    }

    pub fn headwords(&self) -> BTreeSet<&str> {
        self.usages.values().map(|g| g.headword.as_str()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadwordMask {
    pub masked: BTreeSet<SenseId>,
    pub unmasked: BTreeSet<SenseId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskingPlan {
    pub headwords: BTreeMap<String, HeadwordMask>,
    pub rng_seed: u64,
    pub round: u64,
}

impl MaskingPlan {
    pub fn get(&self, headword: &str) -> Option<&HeadwordMask> {
        self.headwords.get(headword)
    }

    pub fn unmasked(&self, headword: &str) -> Option<&BTreeSet<SenseId>> {
        self.headwords.get(headword).map(|m| &m.unmasked)
    }

    /// A plan that hides nothing: every complete sense of every gold headword
    /// stays visible.
    pub fn identity(gold: &GoldAssignment, view: &CompletenessView) -> Self {
        let headwords = gold
            .headwords()
            .into_iter()
            .filter_map(|hw| {
                let complete = view.complete(hw);
                (!complete.is_empty()).then(|| {
                    (
                        hw.to_string(),
                        HeadwordMask {
                            masked: BTreeSet::new(),
                            unmasked: complete.iter().cloned().collect(),
                        },
                    )
                })
            })
            .collect();
        MaskingPlan {
            headwords,
            rng_seed: 0,
            round: 0,
        }
    }
}

/// Masks all but one uniformly chosen complete sense of each gold headword.
///
/// Incomplete senses (per `view`) are outside the plan. A sole complete sense
/// is never masked; headwords without complete senses are left out.
pub fn build_masking_plan(gold: &GoldAssignment, view: &CompletenessView, rng_seed: u64, round: u64) -> MaskingPlan {
    let mut rng = substream(rng_seed, "masking", &[round]);
    let mut headwords = BTreeMap::new();
    for hw in gold.headwords() {
        let complete = view.complete(hw);
        if complete.is_empty() {
            info!("headword {hw:?} has no complete sense; left out of the masking plan");
            continue;
        }
        let keep = if complete.len() == 1 { 0 } else { rng.gen_range(0..complete.len()) };
        let mut mask = HeadwordMask::default();
        for (i, s) in complete.iter().enumerate() {
            if i == keep {
                mask.unmasked.insert(s.clone());
            } else {
                mask.masked.insert(s.clone());
            }
        }
        headwords.insert(hw.to_string(), mask);
    }
    MaskingPlan {
        headwords,
        rng_seed,
        round,
    }
}

/// Assigned iff a gold sense is still unmasked; otherwise unassigned.
/// Usages whose headword is not in the plan are left out.
pub fn derive_labels(gold: &GoldAssignment, plan: &MaskingPlan) -> BTreeMap<String, Label> {
    gold.usages
        .iter()
        .filter_map(|(id, g)| {
            let unmasked = plan.unmasked(&g.headword)?;
            let label = if g.senses.iter().any(|s| unmasked.contains(s)) {
                Label::Assigned
            } else {
                Label::Unassigned
            };
            Some((id.clone(), label))
        })
        .collect()
}
