//! Detection of word usages whose senses are not recorded in a dictionary.
//!
//! A usage of a headword is embedded with a word-in-context encoder and compared
//! against embeddings of the headword's dictionary senses. When the closest sense
//! is still less similar than a tuned threshold, the usage is flagged as
//! *unassigned*: a candidate for a sense the dictionary does not record.
//!
//! The crate is organised along the workflow:
//!
//! * [`inventory`] parses WordNet-like and Svensk-ordbok-like dictionary dumps
//!   into a [`SenseInventory`](inventory::SenseInventory).
//! * [`corpus`] filters sentences, finds usages of headwords and samples them.
//! * [`representation`] turns usages and senses into embedding requests, talks
//!   to an [`EmbeddingProvider`](representation::EmbeddingProvider) and owns the
//!   on-disk vector store.
//! * [`detector`] computes similarities, labels usages and ranks candidates.
//! * [`evaluation`] runs the sense-masking simulation, cross-validation,
//!   threshold sweeps and baselines used for model selection.
//! * [`annotation`] builds annotation instances, aggregates judgments and
//!   computes Krippendorff's alpha.
//!
//! Embedding models are never loaded here. All tests run against the
//! deterministic [`MockProvider`](representation::MockProvider).

pub mod annotation;
pub mod corpus;
pub mod detector;
pub mod evaluation;
pub mod inventory;
pub mod pipeline;
pub mod representation;
pub mod rng;
pub mod text;

pub use inventory::{SenseEntry, SenseId, SenseInventory};
