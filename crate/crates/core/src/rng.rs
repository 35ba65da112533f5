//! Named random substreams derived from one global seed.
//!
//! Every random decision (sampling, masking, fold assignment, baselines) draws
//! from its own stream, keyed by a label and a list of indices, so that
//! rerunning one part of a workflow never shifts the randomness of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Seed for the substream `label` at `indices` under `global_seed`.
pub fn substream_seed(global_seed: u64, label: &str, indices: &[u64]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    h.finalize().into()
}

pub fn substream(global_seed: u64, label: &str, indices: &[u64]) -> StreamRng {
    ChaCha8Rng::from_seed(substream_seed(global_seed, label, indices))
}
