//! Declarative run configuration: a TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sensegap::corpus::SamplingConfig;
use sensegap::evaluation::EvalConfig;
use sensegap::representation::{ModelConfig, SenseMode, Similarity, UsageMode};

use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    Wordnet,
    So,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub beta: f64,
    pub rounds: usize,
    pub folds: usize,
    pub group_by_headword: bool,
    pub mask: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        let d = EvalConfig::default();
        EvalSection {
            beta: d.beta,
            rounds: d.rounds,
            folds: d.folds,
            group_by_headword: d.group_by_headword,
            mask: d.mask,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub max_per_headword: usize,
    pub sample_size: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            max_per_headword: 8,
            sample_size: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub language: String,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// `mock:DIM` or `store:PATH`.
    pub provider: Option<String>,
    pub batch_size: usize,
    pub primary_only: bool,
    pub lemmatizer: Option<PathBuf>,
    pub schema: Option<Schema>,
    pub include_sub_entries: bool,
    /// Model names such as `G3_COS` or `E1_SUB_SPR`; `all` for the full grid.
    pub models: Vec<String>,
    pub threshold: Option<f64>,
    pub eval: EvalSection,
    pub sampling: SamplingConfig,
    pub selection: SelectionSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            language: "en".into(),
            seed: 0,
            output: None,
            provider: None,
            batch_size: 32,
            primary_only: false,
            lemmatizer: None,
            schema: None,
            include_sub_entries: false,
            models: Vec::new(),
            threshold: None,
            eval: EvalSection::default(),
            sampling: SamplingConfig::default(),
            selection: SelectionSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            beta: self.eval.beta,
            rounds: self.eval.rounds,
            folds: self.eval.folds,
            rng_seed: self.seed,
            group_by_headword: self.eval.group_by_headword,
            mask: self.eval.mask,
            ..EvalConfig::default()
        }
    }

    pub fn output_dir(&self) -> Result<&Path, UsageError> {
        self.output
            .as_deref()
            .ok_or_else(|| UsageError("no output directory: pass --out or set `output` in the config".into()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses names like `G3_COS` or `E1_SUB_SPR` (case-insensitive).
pub fn parse_model(name: &str) -> Result<ModelConfig, UsageError> {
    let bad = || UsageError(format!("bad model name {name:?} (expected e.g. G3_COS or E1_SUB_SPR)"));
    let parts: Vec<String> = name.split('_').map(str::to_ascii_uppercase).collect();
    let (sense, usage, sim) = match parts.as_slice() {
        [s, m] => (s, UsageMode::Default, m),
        [s, u, m] if u == "SUB" => (s, UsageMode::Sub, m),
        _ => return Err(bad()),
    };
    let sense_mode: SenseMode = sense.parse().map_err(|_| bad())?;
    let similarity = match sim.as_str() {
        "COS" => Similarity::Cos,
        "SPR" => Similarity::Spr,
        _ => return Err(bad()),
    };
    Ok(ModelConfig::new(usage, sense_mode, similarity))
}
