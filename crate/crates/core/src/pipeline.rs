//! End-to-end helpers chaining corpus, representation, detector and
//! evaluation for one model configuration.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{Lemmatizer, Usage};
use crate::detector::{self, Candidate, PredictionRecord, SimilarityError};
use crate::evaluation::{run_cross_validation, CvReport, EvalConfig, EvalError, GoldAssignment, SimTable, UsageSims};
use crate::inventory::{complete_senses_filtered, CompletenessKind, CompletenessView, SenseId, SenseInventory};
use crate::representation::{
    embed::{mean_vector, sense_requests, usage_request, EmbedError},
    provider::embed_all,
    EmbeddingProvider, EmbeddingRequest, EmbeddingVector, Language, ModelConfig, ProviderError, SenseMode,
    UsageMode,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("usage {usage}: {source}")]
    Similarity { usage: String, source: SimilarityError },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Everything a configuration needs besides the provider.
pub struct Context<'a> {
    pub inventory: &'a SenseInventory,
    pub lemmatizer: &'a dyn Lemmatizer,
    pub language: Language,
    /// Restrict sense eligibility to primary senses.
    pub primary_only: bool,
    pub batch_size: usize,
}

impl Context<'_> {
    pub fn view(&self, kind: CompletenessKind) -> CompletenessView {
        complete_senses_filtered(self.inventory, kind, self.primary_only)
    }
}

/// Requests for the complete senses of `headwords` under `mode`.
pub fn collect_sense_requests<'h>(
    ctx: &Context<'_>,
    mode: SenseMode,
    headwords: impl IntoIterator<Item = &'h str>,
) -> Result<Vec<(SenseId, Vec<EmbeddingRequest>)>, EmbedError> {
    let view = ctx.view(mode.kind());
    let mut out = Vec::new();
    for hw in headwords {
        for id in view.complete(hw) {
            let sense = ctx.inventory.sense(id).expect("view built from the same inventory");
            let reqs = sense_requests(sense, hw, mode, ctx.language, ctx.lemmatizer)?;
            if !reqs.is_empty() {
                out.push((id.clone(), reqs));
            }
        }
    }
    Ok(out)
}

/// Sense vectors for the complete senses of `headwords`, grouped by headword.
pub fn embed_senses<'h, P: EmbeddingProvider + ?Sized>(
    ctx: &Context<'_>,
    mode: SenseMode,
    headwords: impl IntoIterator<Item = &'h str>,
    provider: &P,
) -> Result<BTreeMap<SenseId, EmbeddingVector>, PipelineError> {
    let grouped = collect_sense_requests(ctx, mode, headwords)?;
    let flat: Vec<EmbeddingRequest> = grouped.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    let vectors = embed_all(provider, &flat, ctx.batch_size)?;
    let mut out = BTreeMap::new();
    let mut rest = vectors.as_slice();
    for (id, reqs) in grouped {
        let (mine, tail) = rest.split_at(reqs.len());
        rest = tail;
        if let Some(v) = mean_vector(mine) {
            out.insert(id, v);
        }
    }
    Ok(out)
}

pub fn embed_usages<P: EmbeddingProvider + ?Sized>(
    ctx: &Context<'_>,
    usages: &[Usage],
    mode: UsageMode,
    provider: &P,
) -> Result<BTreeMap<String, EmbeddingVector>, PipelineError> {
    let requests = usages
        .iter()
        .map(|u| usage_request(u, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let vectors = embed_all(provider, &requests, ctx.batch_size)?;
    Ok(usages.iter().map(|u| u.usage_id.clone()).zip(vectors).collect())
}

/// Every request a configuration issues for `usages`, deduplicated by id.
pub fn collect_requests(
    ctx: &Context<'_>,
    usages: &[Usage],
    cfg: &ModelConfig,
) -> Result<Vec<EmbeddingRequest>, EmbedError> {
    let mut out: BTreeMap<String, EmbeddingRequest> = BTreeMap::new();
    for u in usages {
        let r = usage_request(u, cfg.usage_mode)?;
        out.insert(r.request_id.clone(), r);
    }
    let headwords: std::collections::BTreeSet<&str> = usages.iter().map(|u| u.headword.as_str()).collect();
    for (_, reqs) in collect_sense_requests(ctx, cfg.sense_mode, headwords)? {
        for r in reqs {
            out.insert(r.request_id.clone(), r);
        }
    }
    Ok(out.into_values().collect())
}

/// Similarities of each usage to the complete senses of its headword under
/// `cfg`. Usages of headwords without complete senses get an empty table.
pub fn similarity_table<P: EmbeddingProvider + ?Sized>(
    ctx: &Context<'_>,
    usages: &[Usage],
    cfg: &ModelConfig,
    provider: &P,
) -> Result<SimTable, PipelineError> {
    let usage_vecs = embed_usages(ctx, usages, cfg.usage_mode, provider)?;
    let headwords: std::collections::BTreeSet<&str> = usages.iter().map(|u| u.headword.as_str()).collect();
    let sense_vecs = embed_senses(ctx, cfg.sense_mode, headwords, provider)?;
    let view = ctx.view(cfg.sense_mode.kind());
    let mut table = SimTable::new();
    for u in usages {
        let uv = &usage_vecs[&u.usage_id];
        let mut sims = BTreeMap::new();
        for id in view.complete(&u.headword) {
            if let Some(sv) = sense_vecs.get(id) {
                let s = detector::similarity(cfg.similarity, uv.as_slice(), sv.as_slice()).map_err(|source| {
                    PipelineError::Similarity {
                        usage: u.usage_id.clone(),
                        source,
                    }
                })?;
                sims.insert(id.clone(), s);
            }
        }
        table.insert(
            u.usage_id.clone(),
            UsageSims {
                headword: u.headword.clone(),
                sims,
            },
        );
    }
    Ok(table)
}

/// Classifies every usage from a similarity table.
pub fn predictions_from_table(usages: &[Usage], table: &SimTable, threshold: f64) -> Vec<PredictionRecord> {
    usages
        .iter()
        .map(|u| {
            let nearest = table
                .get(&u.usage_id)
                .and_then(|s| detector::nearest_in_table(s.sims.iter().map(|(id, v)| (id, *v))))
                .map(|(id, v)| (id.clone(), v));
            PredictionRecord::new(u.usage_id.clone(), u.headword.clone(), nearest, threshold)
        })
        .collect()
}

/// Embeds and classifies `usages` under `cfg` and its threshold.
pub fn predict_usages<P: EmbeddingProvider + ?Sized>(
    ctx: &Context<'_>,
    usages: &[Usage],
    cfg: &ModelConfig,
    provider: &P,
) -> Result<Vec<PredictionRecord>, PipelineError> {
    let table = similarity_table(ctx, usages, cfg, provider)?;
    Ok(predictions_from_table(usages, &table, cfg.threshold))
}

/// Attaches sentence and glosses to selected predictions.
pub fn build_candidates(ctx: &Context<'_>, selected: &[PredictionRecord], usages: &[Usage]) -> Vec<Candidate> {
    let by_id: BTreeMap<&str, &Usage> = usages.iter().map(|u| (u.usage_id.as_str(), u)).collect();
    selected
        .iter()
        .filter_map(|p| {
            let u = by_id.get(p.usage_id.as_str())?;
            let glosses = ctx
                .inventory
                .get(&u.headword)
                .map(|e| {
                    e.senses
                        .iter()
                        .filter(|s| !ctx.primary_only || s.is_primary)
                        .map(crate::annotation::display_gloss)
                        .collect()
                })
                .unwrap_or_default();
            Some(Candidate {
                prediction: p.clone(),
                sentence: u.sentence.clone(),
                start: u.span.start,
                end: u.span.end,
                glosses,
            })
        })
        .collect()
}

/// Cross-validates `cfg` on annotated usages. The masking plan is built over
/// senses complete for both glosses and examples, so it is shared by every
/// configuration of a language.
pub fn cross_validate<P: EmbeddingProvider + ?Sized>(
    ctx: &Context<'_>,
    usages: &[Usage],
    gold: &GoldAssignment,
    cfg: &ModelConfig,
    eval: &EvalConfig,
    provider: &P,
) -> Result<CvReport, PipelineError> {
    let in_gold: Vec<Usage> = usages
        .iter()
        .filter(|u| gold.usages.contains_key(&u.usage_id))
        .cloned()
        .collect();
    let table = similarity_table(ctx, &in_gold, cfg, provider)?;
    let view = ctx.view(CompletenessKind::Both);
    Ok(run_cross_validation(&table, gold, &view, ctx.inventory, eval)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusTag, LowercaseLemmatizer};
    use crate::inventory::parse_wordnet_dump;
    use crate::representation::{MockProvider, Similarity};
    use crate::text::Span;

    fn inv() -> SenseInventory {
        let doc = r#"{"headword":"bank","entries":[
                {"gloss":"sloping land beside water","examples":["they sat on the bank"]},
                {"gloss":"a financial institution","examples":["the bank raised rates","a bank loan"]}]}
            {"headword":"cat","entries":[{"gloss":"a small feline"}]}"#;
        parse_wordnet_dump(doc).unwrap().inventory
    }

    fn usage(id: &str, sentence: &str, hw: &str) -> Usage {
        let start = sentence.find(hw).unwrap();
        Usage {
            usage_id: id.into(),
            sentence: sentence.into(),
            span: Span::new(start, start + hw.len()),
            token_index: 0,
            headword: hw.into(),
            corpus_tag: CorpusTag::Modern,
            language_tag: "en".into(),
        }
    }

    #[test]
    fn chained_calls_match_module_calls() {
        let inv = inv();
        let lem = LowercaseLemmatizer;
        let ctx = Context {
            inventory: &inv,
            lemmatizer: &lem,
            language: Language::English,
            primary_only: false,
            batch_size: 2,
        };
        let p = MockProvider::new(8).unwrap();
        let usages = vec![usage("u1", "the bank was closed", "bank"), usage("u2", "my cat sleeps", "cat")];
        let mut cfg = ModelConfig::new(UsageMode::Default, SenseMode::E0, Similarity::Cos);
        cfg.threshold = 0.5;
        let preds = predict_usages(&ctx, &usages, &cfg, &p).unwrap();

        // u1 by hand
        let uv = crate::representation::embed::embed_usage(&usages[0], UsageMode::Default, &p).unwrap();
        let mut senses = BTreeMap::new();
        for s in &inv.get("bank").unwrap().senses {
            let v = crate::representation::embed::embed_sense(s, "bank", SenseMode::E0, Language::English, &lem, &p)
                .unwrap()
                .unwrap();
            senses.insert(s.sense_id.clone(), v);
        }
        let expect = detector::predict("u1", "bank", &uv, &senses, Similarity::Cos, 0.5).unwrap();
        assert_eq!(preds[0], expect);
        // cat has no examples
        assert!(preds[1].unrepresentable);
    }

    #[test]
    fn requests_are_unique() {
        let inv = inv();
        let lem = LowercaseLemmatizer;
        let ctx = Context {
            inventory: &inv,
            lemmatizer: &lem,
            language: Language::English,
            primary_only: false,
            batch_size: 32,
        };
        let usages = vec![usage("u1", "the bank was closed", "bank"), usage("u2", "a bank", "bank")];
        let cfg = ModelConfig::new(UsageMode::Sub, SenseMode::G1, Similarity::Cos);
        let reqs = collect_requests(&ctx, &usages, &cfg).unwrap();
        assert_eq!(reqs.len(), 4);
    }
}
