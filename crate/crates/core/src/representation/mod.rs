//! From usages and sense entries to embedding vectors.
//!
//! Nothing in here runs a neural model. Texts and target spans are prepared
//! ([`strategy`], [`embed`]), handed to an [`EmbeddingProvider`] and the
//! resulting vectors may be persisted in a [`VectorStore`]. The store file and
//! the request file are the hand-off format with the external exporter.

pub mod embed;
pub mod provider;
pub mod store;
pub mod strategy;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

use crate::text::Span;

pub use embed::{
    embed_sense, embed_usage, mean_vector, sense_requests, usage_request, ModelConfig, SenseMode,
    Similarity, UsageMode,
};
pub use provider::{CachedProvider, EmbeddingProvider, MockProvider, ProviderError, StoreProvider, VectorCache};
pub use store::{ManifestEntry, StoreError, VectorStore};
pub use strategy::{apply_strategy, locate_target, Language, Prepared, Strategy, StrategyError};

/// A text to embed together with the span of its focus word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRequest {
    pub request_id: String,
    pub text: String,
    #[serde(flatten)]
    pub span: Span,
}

impl EmbeddingRequest {
    pub fn new(request_id: impl Into<String>, text: impl Into<String>, span: Span) -> Self {
        EmbeddingRequest {
            request_id: request_id.into(),
            text: text.into(),
            span,
        }
    }

    /// Hash of the request content; the id is not part of it.
    pub fn content_hash(&self) -> ContentHash {
        ContentHash::of(&self.text, self.span)
    }
}

/// SHA-256 over `len(text) ‖ text ‖ start ‖ end`, integers as little-endian `u64`
/// and the text as UTF-8.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(pub [u8; 32]);

impl ContentHash {
    pub fn of(text: &str, span: Span) -> Self {
        let mut h = Sha256::new();
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
        h.update((span.start as u64).to_le_bytes());
        h.update((span.end as u64).to_le_bytes());
        ContentHash(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(ContentHash(bytes.try_into().ok()?))
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// `None` when empty or when any entry is not finite.
    pub fn new(values: Vec<f32>) -> Option<Self> {
        (!values.is_empty() && values.iter().all(|v| v.is_finite())).then_some(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}
