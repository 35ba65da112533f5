//! Embedding providers: the contract, a deterministic mock, a cache and a
//! provider backed by a vector store written by the exporter.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::store::VectorStore;
use super::{ContentHash, EmbeddingRequest, EmbeddingVector};
use crate::text;

pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("request {request_id}: {reason}")]
    Request { request_id: String, reason: String },
    #[error("embedding provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned {got} vectors for {expected} requests")]
    CountMismatch { expected: usize, got: usize },
}

/// Produces one vector per request, in request order, deterministically per
/// request content. All vectors share [`EmbeddingProvider::dim`].
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        (**self).embed_batch(requests)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        (**self).embed_batch(requests)
    }
}

/// Embeds `requests` in chunks of `batch_size`.
pub fn embed_all<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    requests: &[EmbeddingRequest],
    batch_size: usize,
) -> Result<Vec<EmbeddingVector>, ProviderError> {
    let mut out = Vec::with_capacity(requests.len());
    for chunk in requests.chunks(batch_size.max(1)) {
        let vecs = provider.embed_batch(chunk)?;
        if vecs.len() != chunk.len() {
            return Err(ProviderError::CountMismatch {
                expected: chunk.len(),
                got: vecs.len(),
            });
        }
        out.extend(vecs);
    }
    Ok(out)
}

/// Deterministic stand-in for a word-in-context encoder.
///
/// Each vector is the sum of a unit direction seeded by the lowercased target
/// substring and a smaller unit direction seeded by the full request content.
/// Requests sharing a target word are therefore similar (cosine around 0.6)
/// while any change of text or span still changes the vector.
#[derive(Clone, Copy, Debug)]
pub struct MockProvider {
    dim: usize,
}

impl MockProvider {
    const CONTEXT_WEIGHT: f64 = 0.75;

    pub fn new(dim: usize) -> Option<Self> {
        (dim >= 2).then_some(MockProvider { dim })
    }

    fn direction(&self, seed: [u8; 32]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::from_seed(seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }

    fn embed_one(&self, r: &EmbeddingRequest) -> Result<EmbeddingVector, ProviderError> {
        let target = text::slice(&r.text, r.span)
            .filter(|_| r.span.is_valid_for(text::char_len(&r.text)))
            .ok_or_else(|| ProviderError::Request {
                request_id: r.request_id.clone(),
                reason: format!("span {}..{} outside text", r.span.start, r.span.end),
            })?;
        let target_seed: [u8; 32] = Sha256::digest(target.to_lowercase().as_bytes()).into();
        let word = self.direction(target_seed);
        let context = self.direction(r.content_hash().0);
        let values = word
            .iter()
            .zip(&context)
            .map(|(w, c)| (w + Self::CONTEXT_WEIGHT * c) as f32)
            .collect();
        Ok(EmbeddingVector::new(values).expect("finite mock vector"))
    }
}

impl EmbeddingProvider for MockProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        requests.iter().map(|r| self.embed_one(r)).collect()
    }
}

/// Thread-safe map from request content to vector. Identical keys always map
/// to identical values, so concurrent writers may overwrite each other freely.
#[derive(Debug, Default)]
pub struct VectorCache {
    map: RwLock<HashMap<ContentHash, Arc<[f32]>>>,
}

impl VectorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &ContentHash) -> Option<Arc<[f32]>> {
        self.map.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: ContentHash, values: &[f32]) {
        self.map.write().expect("cache lock").insert(key, values.into());
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copies every entry into a vector store, in hash order.
    pub fn to_store(&self, dim: usize) -> VectorStore {
        let map = self.map.read().expect("cache lock");
        let mut keys: Vec<_> = map.keys().copied().collect();
        keys.sort();
        let mut store = VectorStore::new(dim);
        for k in keys {
            // every cached vector came from a provider of this dim
            store.insert(k, map[&k].to_vec()).expect("cached vector dim");
        }
        store
    }
}

/// Wraps a provider with a [`VectorCache`] and batching.
pub struct CachedProvider<P> {
    inner: P,
    cache: Arc<VectorCache>,
    batch_size: usize,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        Self::with_cache(inner, Arc::new(VectorCache::new()), DEFAULT_BATCH_SIZE)
    }

    pub fn with_cache(inner: P, cache: Arc<VectorCache>, batch_size: usize) -> Self {
        CachedProvider {
            inner,
            cache,
            batch_size: batch_size.max(1),
        }
    }

    pub fn cache(&self) -> &Arc<VectorCache> {
        &self.cache
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let keys: Vec<ContentHash> = requests.iter().map(EmbeddingRequest::content_hash).collect();
        let mut missing: Vec<EmbeddingRequest> = Vec::new();
        let mut queued = std::collections::HashSet::new();
        for (r, k) in requests.iter().zip(&keys) {
            if self.cache.get(k).is_none() && queued.insert(*k) {
                missing.push(r.clone());
            }
        }
        let fresh = embed_all(&self.inner, &missing, self.batch_size)?;
        for (r, v) in missing.iter().zip(&fresh) {
            self.cache.insert(r.content_hash(), v.as_slice());
        }
        keys.iter()
            .zip(requests)
            .map(|(k, r)| {
                let v = self.cache.get(k).ok_or_else(|| ProviderError::Request {
                    request_id: r.request_id.clone(),
                    reason: "vector missing from cache".into(),
                })?;
                Ok(EmbeddingVector::new(v.to_vec()).expect("cached vectors are valid"))
            })
            .collect()
    }
}

/// Serves vectors from a store file produced by the exporter.
#[derive(Clone, Debug)]
pub struct StoreProvider {
    store: VectorStore,
}

impl StoreProvider {
    pub fn new(store: VectorStore) -> Self {
        StoreProvider { store }
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }
}

impl EmbeddingProvider for StoreProvider {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn embed_batch(&self, requests: &[EmbeddingRequest]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        requests
            .iter()
            .map(|r| {
                let v = self.store.get(&r.content_hash()).ok_or_else(|| ProviderError::Request {
                    request_id: r.request_id.clone(),
                    reason: "not present in vector store; export it first".into(),
                })?;
                EmbeddingVector::new(v.to_vec()).ok_or_else(|| ProviderError::Request {
                    request_id: r.request_id.clone(),
                    reason: "stored vector has non-finite entries".into(),
                })
            })
            .collect()
    }
}
