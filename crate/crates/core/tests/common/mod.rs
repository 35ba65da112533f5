#![allow(dead_code)]

use std::path::PathBuf;

use sensegap::corpus::{CorpusTag, Usage};
use sensegap::evaluation::GoldAssignment;
use sensegap::inventory::{parse_so_dump, parse_wordnet_dump};
use sensegap::text::Span;
use sensegap::SenseInventory;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn wordnet10() -> SenseInventory {
    parse_wordnet_dump(&read_fixture("wordnet10.jsonl")).unwrap().inventory
}

pub fn so3() -> SenseInventory {
    parse_so_dump(&read_fixture("so3.json")).unwrap().inventory
}

const FRAMES: [&str; 6] = [
    "the {} was mentioned in the report",
    "nobody expected a {} like that",
    "she wrote about the {} yesterday",
    "a {} appeared near the old station",
    "we talked for hours about one {}",
    "his {} surprised the committee",
];

/// A usage whose target is the headword itself, placed in a template sentence.
pub fn usage(id: &str, headword: &str, frame: usize, tag: CorpusTag) -> Usage {
    let f = FRAMES[frame % FRAMES.len()];
    let start = f.find("{}").unwrap();
    let sentence = f.replacen("{}", headword, 1);
    Usage {
        usage_id: id.to_string(),
        span: Span::new(start, start + headword.chars().count()),
        sentence,
        token_index: f[..start].split_whitespace().count(),
        headword: headword.to_string(),
        corpus_tag: tag,
        language_tag: "en".into(),
    }
}

/// `n` annotated usages over the multi-sense fixture headwords. Every fifth
/// usage has no gold sense; the others point at one or two senses chosen by a
/// fixed arithmetic pattern.
pub fn cv_fixture(n: usize) -> (SenseInventory, Vec<Usage>, GoldAssignment) {
    let inv = wordnet10();
    let headwords = ["bank", "run", "relative", "light", "inadequate", "unable", "plant", "cat"];
    let mut usages = Vec::new();
    let mut gold = GoldAssignment::default();
    for i in 0..n {
        let hw = headwords[i % headwords.len()];
        let tag = if i % 3 == 0 { CorpusTag::Historical } else { CorpusTag::Modern };
        let u = usage(&format!("u{i:03}"), hw, i / headwords.len(), tag);
        let senses = &inv.get(hw).unwrap().senses;
        let mut gs = Vec::new();
        if i % 5 != 4 {
            gs.push(senses[(i * 7 + i / 3) % senses.len()].sense_id.clone());
            if i % 7 == 3 && senses.len() > 1 {
                gs.push(senses[(i + 1) % senses.len()].sense_id.clone());
            }
        }
        gold.insert(u.usage_id.clone(), hw, gs);
        usages.push(u);
    }
    (inv, usages, gold)
}
