mod common;

use std::collections::BTreeSet;

use sensegap::corpus::LowercaseLemmatizer;
use sensegap::detector::Label;
use sensegap::evaluation::cv::UsageSims;
use sensegap::evaluation::{
    build_masking_plan, derive_labels, frequency_baseline, run_cross_validation, EvalConfig, GoldAssignment,
    MaskingPlan, SimTable,
};
use sensegap::evaluation::report::{render_grid, render_round_table};
use sensegap::inventory::{complete_senses, CompletenessKind};
use sensegap::pipeline::{cross_validate, Context};
use sensegap::representation::{Language, MockProvider, ModelConfig, SenseMode, Similarity, UsageMode};
use sensegap::SenseId;

fn sid(inv: &sensegap::SenseInventory, hw: &str, i: usize) -> SenseId {
    inv.get(hw).unwrap().senses[i].sense_id.clone()
}

#[test]
fn frequency_baseline_by_hand() {
    let inv = common::wordnet10();
    let view = complete_senses(&inv, CompletenessKind::Gloss);
    let mut gold = GoldAssignment::default();
    gold.insert("a", "bank", [sid(&inv, "bank", 1)]);
    gold.insert("b", "bank", [sid(&inv, "bank", 0)]);
    gold.insert("c", "bank", []);
    gold.insert("d", "unable", [sid(&inv, "unable", 0), sid(&inv, "unable", 1)]);
    gold.insert("e", "unable", [sid(&inv, "unable", 1)]);
    gold.insert("f", "cat", [sid(&inv, "cat", 0)]);

    // nothing masked: bank's top sense is its second entry, the others their first
    let plan = MaskingPlan::identity(&gold, &view);
    let got = frequency_baseline(&gold, &inv, &plan).unwrap();
    let expect = [
        ("a", Label::Assigned),
        ("b", Label::Unassigned),
        ("c", Label::Unassigned),
        ("d", Label::Assigned),
        ("e", Label::Unassigned),
        ("f", Label::Assigned),
    ];
    assert_eq!(got.into_iter().collect::<Vec<_>>(), expect.map(|(a, b)| (a.to_string(), b)).to_vec());

    // hide bank's top sense: the next visible one in rank order takes over
    let mut masked = plan.clone();
    let m = masked.headwords.get_mut("bank").unwrap();
    m.unmasked.remove(&sid(&inv, "bank", 1));
    m.masked.insert(sid(&inv, "bank", 1));
    let got = frequency_baseline(&gold, &inv, &masked).unwrap();
    assert_eq!(got["a"], Label::Unassigned);
    assert_eq!(got["b"], Label::Assigned);

    assert!(frequency_baseline(&GoldAssignment::default(), &common::so3(), &plan).is_none());
}

#[test]
fn worked_example_masking() {
    let inv = common::wordnet10();
    let view = complete_senses(&inv, CompletenessKind::Gloss);
    let person = sid(&inv, "relative", 2);
    let mut gold = GoldAssignment::default();
    gold.insert("u", "relative", [person.clone()]);
    let mut seen = BTreeSet::new();
    for round in 0..40 {
        let plan = build_masking_plan(&gold, &view, 3, round);
        let label = derive_labels(&gold, &plan)["u"];
        let visible = plan.unmasked("relative").unwrap().contains(&person);
        assert_eq!(label == Label::Assigned, visible);
        seen.insert(visible);
    }
    assert_eq!(seen.len(), 2, "both outcomes occur across rounds");
}

#[test]
fn identity_plan_keeps_gold_distribution() {
    let (inv, _, gold) = common::cv_fixture(60);
    let view = complete_senses(&inv, CompletenessKind::Gloss);
    let labels = derive_labels(&gold, &MaskingPlan::identity(&gold, &view));
    let natural = gold.usages.values().filter(|g| g.senses.is_empty()).count();
    let unassigned = labels.values().filter(|&&l| l == Label::Unassigned).count();
    assert_eq!(unassigned, natural);

    let mut sims = SimTable::new();
    for (id, g) in &gold.usages {
        let mut table = UsageSims {
            headword: g.headword.clone(),
            ..Default::default()
        };
        for s in view.complete(&g.headword) {
            table.sims.insert(s.clone(), if g.senses.contains(s) { 0.9 } else { 0.1 });
        }
        sims.insert(id.clone(), table);
    }
    let cfg = EvalConfig {
        mask: false,
        rounds: 2,
        ..Default::default()
    };
    let r = run_cross_validation(&sims, &gold, &view, &inv, &cfg).unwrap();
    assert!(r.rounds.iter().all(|round| round.unassigned == natural));
    // perfectly separated similarities are recovered exactly
    assert!(r.rounds.iter().all(|round| round.folds.iter().all(|f| f.test.f_beta == 1.0)));
}

fn cv_once(seed: u64) -> String {
    let (inv, usages, gold) = common::cv_fixture(60);
    let lem = LowercaseLemmatizer;
    let ctx = Context {
        inventory: &inv,
        lemmatizer: &lem,
        language: Language::English,
        primary_only: false,
        batch_size: 16,
    };
    let cfg = ModelConfig::new(UsageMode::Default, SenseMode::G3, Similarity::Cos);
    let eval = EvalConfig {
        rng_seed: seed,
        ..Default::default()
    };
    let r = cross_validate(&ctx, &usages, &gold, &cfg, &eval, &MockProvider::new(16).unwrap()).unwrap();
    let mut out = serde_json::to_string(&r).unwrap();
    out.push_str(&render_round_table(&r.rounds[9]));
    out.push_str(&render_grid(&[(cfg, r.test_f.mean)]));
    out
}

#[test]
fn cross_validation_is_seeded() {
    let a = cv_once(42);
    assert_eq!(a, cv_once(42));
    assert_ne!(a, cv_once(43));
}
