//! Model configurations and the requests they generate for usages and senses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::provider::{EmbeddingProvider, ProviderError};
use super::strategy::{apply_strategy, locate_target, Language, Strategy, StrategyError};
use super::{EmbeddingRequest, EmbeddingVector};
use crate::corpus::{Lemmatizer, Usage};
use crate::inventory::{CompletenessKind, SenseEntry, SourceTag};
use crate::text;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("usage {0}: target span is not valid in its sentence")]
    InvalidUsageSpan(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageMode {
    /// The sentence as found in the corpus.
    Default,
    /// Target word replaced by its headword.
    Sub,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SenseMode {
    G0,
    G1,
    G2,
    G3,
    E0,
    E1,
    E2,
    E3,
    E4,
}

impl SenseMode {
    pub const ALL: [SenseMode; 9] = [
        SenseMode::E0,
        SenseMode::E1,
        SenseMode::E2,
        SenseMode::E3,
        SenseMode::E4,
        SenseMode::G0,
        SenseMode::G1,
        SenseMode::G2,
        SenseMode::G3,
    ];

    /// The sense field the mode embeds.
    pub fn kind(self) -> CompletenessKind {
        match self {
            SenseMode::G0 | SenseMode::G1 | SenseMode::G2 | SenseMode::G3 => CompletenessKind::Gloss,
            _ => CompletenessKind::Examples,
        }
    }

    pub fn strategy(self) -> Strategy {
        use SenseMode::*;
        match self {
            G0 | E0 => Strategy::AsIs,
            G1 | E1 => Strategy::Prefix,
            G2 | E2 => Strategy::Parenthesis,
            G3 | E3 => Strategy::Apposition,
            E4 => Strategy::Replace,
        }
    }
}

impl fmt::Display for SenseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for SenseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SenseMode::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown sense mode {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Cos,
    Spr,
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Similarity::Cos => "COS",
            Similarity::Spr => "SPR",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("E4 needs synset members and is only defined for WordNet-like inventories")]
    ReplaceNeedsSynsets,
    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub usage_mode: UsageMode,
    pub sense_mode: SenseMode,
    pub similarity: Similarity,
    pub threshold: f64,
}

impl ModelConfig {
    pub fn new(usage_mode: UsageMode, sense_mode: SenseMode, similarity: Similarity) -> Self {
        ModelConfig {
            usage_mode,
            sense_mode,
            similarity,
            threshold: 0.0,
        }
    }

    pub fn validate(&self, source: SourceTag) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfigError::Threshold(self.threshold));
        }
        if self.sense_mode == SenseMode::E4 && source != SourceTag::WordnetLike {
            return Err(ConfigError::ReplaceNeedsSynsets);
        }
        Ok(())
    }

    /// Identifier such as `E4_COS` or `G3_SUB_SPR`.
    pub fn name(&self) -> String {
        match self.usage_mode {
            UsageMode::Default => format!("{}_{}", self.sense_mode, self.similarity),
            UsageMode::Sub => format!("{}_SUB_{}", self.sense_mode, self.similarity),
        }
    }

    /// Every combination of usage mode, sense mode and similarity valid for `source`.
    pub fn grid(source: SourceTag) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for sense_mode in SenseMode::ALL {
            for usage_mode in [UsageMode::Default, UsageMode::Sub] {
                for similarity in [Similarity::Cos, Similarity::Spr] {
                    let c = ModelConfig::new(usage_mode, sense_mode, similarity);
                    if c.validate(source).is_ok() {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

pub fn usage_request(u: &Usage, mode: UsageMode) -> Result<EmbeddingRequest, EmbedError> {
    if !u.span.is_valid_for(text::char_len(&u.sentence)) {
        return Err(EmbedError::InvalidUsageSpan(u.usage_id.clone()));
    }
    let (text, span) = match mode {
        UsageMode::Default => (u.sentence.clone(), u.span),
        UsageMode::Sub => text::replace(&u.sentence, u.span, &u.headword)
            .ok_or_else(|| EmbedError::InvalidUsageSpan(u.usage_id.clone()))?,
    };
    let tag = match mode {
        UsageMode::Default => "default",
        UsageMode::Sub => "sub",
    };
    Ok(EmbeddingRequest::new(format!("u:{}:{tag}", u.usage_id), text, span))
}

pub fn embed_usage<P: EmbeddingProvider + ?Sized>(
    u: &Usage,
    mode: UsageMode,
    provider: &P,
) -> Result<EmbeddingVector, EmbedError> {
    let req = usage_request(u, mode)?;
    let mut v = provider.embed_batch(std::slice::from_ref(&req))?;
    v.pop().ok_or({
        EmbedError::Provider(ProviderError::CountMismatch { expected: 1, got: 0 })
    })
}

/// Requests representing one sense under `mode`; empty when the sense lacks
/// the field the mode needs.
pub fn sense_requests(
    sense: &SenseEntry,
    headword: &str,
    mode: SenseMode,
    lang: Language,
    lemmatizer: &dyn Lemmatizer,
) -> Result<Vec<EmbeddingRequest>, EmbedError> {
    let strategy = mode.strategy();
    let mut out = Vec::new();
    match mode.kind() {
        CompletenessKind::Gloss => {
            if let Some(gloss) = sense.effective_gloss() {
                let p = apply_strategy(strategy, headword, gloss, None, lang)?;
                out.push(EmbeddingRequest::new(format!("s:{}:{mode}", sense.sense_id), p.text, p.span));
            }
        }
        _ => {
            let mut candidates: Vec<&str> = vec![headword];
            candidates.extend(sense.synset_members.iter().map(String::as_str));
            for (i, example) in sense.examples.iter().enumerate() {
                let contained = locate_target(example, &candidates, lemmatizer);
                let p = apply_strategy(strategy, headword, example, contained, lang)?;
                out.push(EmbeddingRequest::new(
                    format!("s:{}:{mode}:{i}", sense.sense_id),
                    p.text,
                    p.span,
                ));
            }
        }
    }
    Ok(out)
}

/// Componentwise arithmetic mean. Inputs are summed in a canonical order, so
/// the result does not depend on their order.
pub fn mean_vector(vectors: &[EmbeddingVector]) -> Option<EmbeddingVector> {
    let dim = vectors.first()?.dim();
    let mut sorted: Vec<&EmbeddingVector> = vectors.iter().collect();
    sorted.sort_by(|a, b| {
        a.as_slice()
            .iter()
            .map(|x| x.to_bits())
            .cmp(b.as_slice().iter().map(|x| x.to_bits()))
    });
    let mut sum = vec![0f64; dim];
    for v in sorted {
        for (s, x) in sum.iter_mut().zip(v.as_slice()) {
            *s += f64::from(*x);
        }
    }
    let n = vectors.len() as f64;
    EmbeddingVector::new(sum.into_iter().map(|s| (s / n) as f32).collect())
}

/// Embeds a sense: the prepared gloss for G modes, the mean over prepared
/// examples for E modes. `None` when the sense is incomplete for the mode.
pub fn embed_sense<P: EmbeddingProvider + ?Sized>(
    sense: &SenseEntry,
    headword: &str,
    mode: SenseMode,
    lang: Language,
    lemmatizer: &dyn Lemmatizer,
    provider: &P,
) -> Result<Option<EmbeddingVector>, EmbedError> {
    let requests = sense_requests(sense, headword, mode, lang, lemmatizer)?;
    if requests.is_empty() {
        return Ok(None);
    }
    let vectors = provider.embed_batch(&requests)?;
    Ok(mean_vector(&vectors))
}
