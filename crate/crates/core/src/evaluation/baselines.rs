//! Random and most-frequent-sense baselines.

use std::collections::BTreeMap;

use rand::Rng;

use super::masking::{GoldAssignment, MaskingPlan};
use crate::detector::Label;
use crate::inventory::SenseInventory;

/// Share of assigned labels; 0 for an empty slice.
pub fn assigned_share(labels: &[Label]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|&&l| l == Label::Assigned).count() as f64 / labels.len() as f64
}

/// `n` independent draws predicting assigned with probability `p_assigned`.
pub fn random_baseline<R: Rng + ?Sized>(n: usize, p_assigned: f64, rng: &mut R) -> Vec<Label> {
    let p = p_assigned.clamp(0.0, 1.0);
    (0..n)
        .map(|_| {
            if rng.gen_bool(p) {
                Label::Assigned
            } else {
                Label::Unassigned
            }
        })
        .collect()
}

/// Predicts assigned iff the headword's most frequent unmasked sense is among
/// the usage's gold senses. `None` when the inventory has no frequency ranks
/// for a headword in the plan.
pub fn frequency_baseline(
    gold: &GoldAssignment,
    inv: &SenseInventory,
    plan: &MaskingPlan,
) -> Option<BTreeMap<String, Label>> {
    let mut top = BTreeMap::new();
    for (hw, mask) in &plan.headwords {
        let entry = inv.get(hw)?;
        entry.sense_frequency_rank.as_ref()?;
        top.insert(hw.as_str(), entry.most_frequent_sense(|s| mask.unmasked.contains(s)));
    }
    Some(
        gold.usages
            .iter()
            .filter_map(|(id, g)| {
                let best = top.get(g.headword.as_str())?;
                let label = match best {
                    Some(s) if g.senses.contains(*s) => Label::Assigned,
                    _ => Label::Unassigned,
                };
                Some((id.clone(), label))
            })
            .collect(),
    )
}
