mod common;

use std::sync::Arc;

use sensegap::corpus::{CorpusTag, LowercaseLemmatizer};
use sensegap::representation::embed::{embed_sense, mean_vector, sense_requests, usage_request};
use sensegap::representation::provider::embed_all;
use sensegap::representation::store::{read_manifest, read_requests, write_manifest, write_requests};
use sensegap::representation::{
    apply_strategy, CachedProvider, EmbeddingProvider, EmbeddingRequest, Language, ManifestEntry, MockProvider,
    ModelConfig, SenseMode, StoreProvider, Strategy, UsageMode, VectorCache, VectorStore,
};
use sensegap::inventory::SourceTag;
use sensegap::text::Span;

#[test]
fn swedish_apposition_uses_dvs() {
    let p = apply_strategy(Strategy::Apposition, "lön", "en dålig lön", None, Language::Swedish).unwrap();
    assert_eq!(p.text, "en dålig lön, dvs., lön");
    assert_eq!(sensegap::text::slice(&p.text, p.span), Some("lön"));
}

#[test]
fn sub_usage_puts_headword_at_target() {
    let mut u = common::usage("u1", "running", 0, CorpusTag::Modern);
    u.headword = "run".into();
    let r = usage_request(&u, UsageMode::Sub).unwrap();
    assert_eq!(sensegap::text::slice(&r.text, r.span), Some("run"));
    assert_eq!(r.text, "the run was mentioned in the report");

    let mut v = common::usage("u2", "runs", 0, CorpusTag::Modern);
    v.headword = "run".into();
    let r2 = usage_request(&v, UsageMode::Sub).unwrap();
    assert_eq!((r.text, r.span), (r2.text, r2.span));
}

#[test]
fn example_mean_is_componentwise_average() {
    let inv = common::wordnet10();
    let light = &inv.get("light").unwrap().senses[1];
    let p = MockProvider::new(6).unwrap();
    let lem = LowercaseLemmatizer;
    let reqs = sense_requests(light, "light", SenseMode::E0, Language::English, &lem).unwrap();
    assert_eq!(reqs.len(), 3);
    let vs = p.embed_batch(&reqs).unwrap();
    let got = embed_sense(light, "light", SenseMode::E0, Language::English, &lem, &p).unwrap().unwrap();
    for d in 0..6 {
        let expect: f64 = vs.iter().map(|v| f64::from(v.as_slice()[d])).sum::<f64>() / 3.0;
        assert!((f64::from(got.as_slice()[d]) - expect).abs() < 1e-6);
    }
    // singleton
    assert_eq!(mean_vector(&vs[..1]).unwrap(), vs[0]);
}

#[test]
fn glossless_sense_uses_secondary_gloss() {
    let inv = common::so3();
    let s = &inv.get("lön").unwrap().senses[0];
    let reqs = sense_requests(s, "lön", SenseMode::G1, Language::Swedish, &LowercaseLemmatizer).unwrap();
    assert_eq!(reqs[0].text, "lön: ersättning för arbete");
}

#[test]
fn incomplete_sense_has_no_vector() {
    let inv = common::wordnet10();
    let tea = &inv.get("tea").unwrap().senses[0];
    let p = MockProvider::new(4).unwrap();
    assert!(embed_sense(tea, "tea", SenseMode::E1, Language::English, &LowercaseLemmatizer, &p).unwrap().is_none());
    assert!(embed_sense(tea, "tea", SenseMode::G0, Language::English, &LowercaseLemmatizer, &p).unwrap().is_some());
}

#[test]
fn e4_requires_wordnet() {
    let cfg = ModelConfig::new(UsageMode::Default, SenseMode::E4, sensegap::representation::Similarity::Cos);
    assert!(cfg.validate(SourceTag::WordnetLike).is_ok());
    assert!(cfg.validate(SourceTag::SoLike).is_err());
    assert_eq!(ModelConfig::grid(SourceTag::WordnetLike).len(), 36);
    assert_eq!(ModelConfig::grid(SourceTag::SoLike).len(), 32);
}

fn requests(n: usize) -> Vec<EmbeddingRequest> {
    (0..n)
        .map(|i| {
            let text = format!("sentence number {i} with a target");
            let len = text.chars().count();
            EmbeddingRequest::new(format!("r{i}"), text, Span::new(len - 6, len))
        })
        .collect()
}

#[test]
fn store_files_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let p = MockProvider::new(12).unwrap();
    let reqs = requests(100);
    let vecs = embed_all(&p, &reqs, 7).unwrap();
    let mut store = VectorStore::new(12);
    for (r, v) in reqs.iter().zip(&vecs) {
        store.insert(r.content_hash(), v.as_slice().to_vec()).unwrap();
    }
    let path = dir.path().join("vectors.bin");
    store.write(&path).unwrap();
    let back = VectorStore::read(&path).unwrap();
    assert_eq!(back.len(), 100);
    for (r, v) in reqs.iter().zip(&vecs) {
        let got = back.get(&r.content_hash()).unwrap();
        assert!(got.iter().zip(v.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 28 + 100 * (32 + 12 * 4));

    // manifest and request files
    let manifest: Vec<ManifestEntry> = reqs.iter().map(ManifestEntry::for_request).collect();
    write_manifest(&dir.path().join("manifest.jsonl"), &manifest).unwrap();
    assert_eq!(read_manifest(&dir.path().join("manifest.jsonl")).unwrap(), manifest);
    write_requests(&dir.path().join("requests.jsonl"), &reqs).unwrap();
    assert_eq!(read_requests(&dir.path().join("requests.jsonl")).unwrap(), reqs);

    // a store-backed provider reproduces the vectors
    let sp = StoreProvider::new(back);
    assert_eq!(sp.embed_batch(&reqs[..3]).unwrap(), vecs[..3].to_vec());
}

#[test]
fn duplicate_requests_share_one_cache_entry() {
    let cache = Arc::new(VectorCache::new());
    let p = CachedProvider::with_cache(MockProvider::new(8).unwrap(), cache.clone(), 4);
    let mut reqs = requests(3);
    reqs.push(EmbeddingRequest::new("dup", reqs[0].text.clone(), reqs[0].span));
    let out = p.embed_batch(&reqs).unwrap();
    assert_eq!(out[0], out[3]);
    assert_eq!(cache.len(), 3);
    assert_eq!(cache.to_store(8).len(), 3);
}

#[test]
fn mock_is_deterministic_and_span_sensitive() {
    let p = MockProvider::new(8).unwrap();
    let a = EmbeddingRequest::new("a", "the bank is open", Span::new(4, 8));
    let b = EmbeddingRequest::new("b", "the bank is open", Span::new(4, 8));
    let c = EmbeddingRequest::new("c", "the bank is open", Span::new(0, 3));
    let v = p.embed_batch(&[a, b, c]).unwrap();
    assert_eq!(v[0], v[1]);
    assert_ne!(v[0], v[2]);
    assert!(MockProvider::new(1).is_none());
}
