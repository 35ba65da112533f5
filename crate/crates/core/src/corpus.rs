//! Corpus ingestion: sentence filtering, usage search and random sampling.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inventory::SenseInventory;
use crate::rng::substream;
use crate::text::{self, char_len, Span};

/// Sentences longer than this many characters are dropped.
pub const MAX_SENTENCE_CHARS: usize = 300;
/// Sentences whose share of punctuation tokens exceeds this are dropped.
pub const MAX_PUNCTUATION_SHARE: f64 = 0.25;

#[derive(Debug, Error)]
#[error("lemmatizer failed: {0}")]
pub struct LemmatizerError(pub String);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Span,
}

impl Token {
    /// A token made only of non-alphanumeric characters.
    pub fn is_punctuation(&self) -> bool {
        !self.text.chars().any(char::is_alphanumeric)
    }
}

/// Splits on whitespace, then separates runs of word characters from runs of
/// other characters. Apostrophes and hyphens between letters stay inside words.
pub fn simple_tokenize(sentence: &str) -> Vec<Token> {
    let chars: Vec<char> = sentence.chars().collect();
    let is_word = |i: usize| -> bool {
        let c = chars[i];
        if c.is_alphanumeric() {
            return true;
        }
        matches!(c, '\'' | '’' | '-')
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].is_alphanumeric()
            && chars[i + 1].is_alphanumeric()
    };
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let word = is_word(i);
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() && is_word(i) == word {
            i += 1;
        }
        tokens.push(Token {
            text: chars[start..i].iter().collect(),
            span: Span::new(start, i),
        });
    }
    tokens
}

/// Tokenisation and lemmatisation for one language. Must be deterministic.
pub trait Lemmatizer: Send + Sync {
    fn tokenize(&self, sentence: &str) -> Result<Vec<Token>, LemmatizerError> {
        Ok(simple_tokenize(sentence))
    }

    fn lemma(&self, token: &str) -> Result<String, LemmatizerError>;
}

/// Lowercases every token and otherwise leaves it unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct LowercaseLemmatizer;

impl Lemmatizer for LowercaseLemmatizer {
    fn lemma(&self, token: &str) -> Result<String, LemmatizerError> {
        Ok(token.to_lowercase())
    }
}

/// Dictionary-backed lemmatizer: lowercase form → lemma, falling back to the
/// lowercased form.
#[derive(Clone, Debug, Default)]
pub struct TableLemmatizer {
    table: HashMap<String, String>,
}

impl TableLemmatizer {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        TableLemmatizer {
            table: pairs
                .into_iter()
                .map(|(k, v)| (k.as_ref().to_lowercase(), v.into()))
                .collect(),
        }
    }

    /// Reads `form<TAB>lemma` lines. Blank lines and `#` comments are ignored.
    pub fn from_tsv(doc: &str) -> Result<Self, LemmatizerError> {
        let mut pairs = Vec::new();
        for (i, line) in doc.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (form, lemma) = line
                .split_once('\t')
                .ok_or_else(|| LemmatizerError(format!("line {}: expected form<TAB>lemma", i + 1)))?;
            pairs.push((form.to_string(), lemma.to_string()));
        }
        Ok(TableLemmatizer::new(pairs))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Lemmatizer for TableLemmatizer {
    fn lemma(&self, token: &str) -> Result<String, LemmatizerError> {
        let key = token.to_lowercase();
        Ok(self.table.get(&key).cloned().unwrap_or(key))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    Length,
    Punctuation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Drop(DropReason),
}

impl FilterDecision {
    pub fn is_keep(self) -> bool {
        self == FilterDecision::Keep
    }
}

pub fn filter_sentence(sentence: &str) -> FilterDecision {
    filter_tokens(sentence, &simple_tokenize(sentence))
}

fn filter_tokens(sentence: &str, tokens: &[Token]) -> FilterDecision {
    if char_len(sentence) > MAX_SENTENCE_CHARS {
        return FilterDecision::Drop(DropReason::Length);
    }
    if !tokens.is_empty() {
        let punct = tokens.iter().filter(|t| t.is_punctuation()).count();
        if punct as f64 / tokens.len() as f64 > MAX_PUNCTUATION_SHARE {
            return FilterDecision::Drop(DropReason::Punctuation);
        }
    }
    FilterDecision::Keep
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusTag {
    Modern,
    Historical,
}

impl fmt::Display for CorpusTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusTag::Modern => "modern",
            CorpusTag::Historical => "historical",
        })
    }
}

impl std::str::FromStr for CorpusTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "modern" => Ok(CorpusTag::Modern),
            "historical" => Ok(CorpusTag::Historical),
            other => Err(format!("unknown corpus tag {other:?} (expected modern or historical)")),
        }
    }
}

/// A sentence with one marked occurrence of an inventory headword.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub usage_id: String,
    pub sentence: String,
    #[serde(flatten)]
    pub span: Span,
    pub token_index: usize,
    pub headword: String,
    pub corpus_tag: CorpusTag,
    #[serde(default)]
    pub language_tag: String,
}

impl Usage {
    pub fn target(&self) -> &str {
        text::slice(&self.sentence, self.span).unwrap_or("")
    }
}

/// Where a batch of sentences comes from.
#[derive(Clone, Debug)]
pub struct CorpusSource {
    pub tag: CorpusTag,
    pub language_tag: String,
}

/// Finds every token (or contiguous token run, for multi-word headwords)
/// whose lemma sequence equals an inventory headword.
///
/// Sentences are cleaned and filtered first; sentences the lemmatizer fails on
/// are skipped with a warning. `usage_id` is `"{tag}:{line}:{token}"` with the
/// zero-based line number in `sentences`.
pub fn find_usages<'a, I>(
    sentences: I,
    inv: &SenseInventory,
    lemmatizer: &dyn Lemmatizer,
    source: &CorpusSource,
) -> Vec<Usage>
where
    I: IntoIterator<Item = &'a str>,
{
    // first word of headword → (headword, all words)
    let mut by_first: HashMap<&str, Vec<(&str, Vec<&str>)>> = HashMap::new();
    for hw in inv.headwords() {
        let parts: Vec<&str> = hw.split_whitespace().collect();
        if let Some(first) = parts.first() {
            by_first.entry(first).or_default().push((hw, parts));
        }
    }

    let mut out = Vec::new();
    for (line, raw) in sentences.into_iter().enumerate() {
        let sentence = text::clean(raw);
        let analysed = lemmatizer.tokenize(&sentence).and_then(|tokens| {
            let lemmas = tokens
                .iter()
                .map(|t| lemmatizer.lemma(&t.text))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((tokens, lemmas))
        });
        let (tokens, lemmas) = match analysed {
            Ok(x) => x,
            Err(e) => {
                warn!("skipping {}:{line}: {e}", source.tag);
                continue;
            }
        };
        if !filter_tokens(&sentence, &tokens).is_keep() {
            continue;
        }
        for (i, lemma) in lemmas.iter().enumerate() {
            let Some(candidates) = by_first.get(lemma.as_str()) else {
                continue;
            };
            for (hw, parts) in candidates {
                let end = i + parts.len();
                if end > lemmas.len() || !lemmas[i..end].iter().zip(parts).all(|(l, p)| l == p) {
                    continue;
                }
                out.push(Usage {
                    usage_id: format!("{}:{line}:{i}", source.tag),
                    sentence: sentence.clone(),
                    span: Span::new(tokens[i].span.start, tokens[end - 1].span.end),
                    token_index: i,
                    headword: hw.to_string(),
                    corpus_tag: source.tag,
                    language_tag: source.language_tag.clone(),
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Size of the random headword subset searched.
    pub headword_pool: usize,
    /// Stop once this many headwords have at least one usage.
    pub stop_at_headwords: usize,
    pub max_usages_per_headword: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            headword_pool: 3000,
            stop_at_headwords: 150,
            max_usages_per_headword: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseSample {
    pub usages: Vec<Usage>,
    pub headwords_found: usize,
    pub headwords_searched: usize,
    /// Fewer than `stop_at_headwords` headwords had usages.
    pub shortfall: bool,
}

/// Random phase-I sample from the usages of one corpus.
///
/// A random subset of `headword_pool` dictionary headwords is searched in
/// random order until `stop_at_headwords` of them have a usage; of each such
/// headword at most `max_usages_per_headword` usages are kept, chosen at random.
pub fn sample_random_phase1(
    usages: &[Usage],
    inv: &SenseInventory,
    rng_seed: u64,
    cfg: &SamplingConfig,
) -> PhaseSample {
    let mut rng = substream(rng_seed, "phase1-sample", &[]);
    let mut pool: Vec<&str> = inv.headwords().collect();
    pool.shuffle(&mut rng);
    pool.truncate(cfg.headword_pool);

    let mut by_headword: BTreeMap<&str, Vec<&Usage>> = BTreeMap::new();
    for u in usages {
        by_headword.entry(u.headword.as_str()).or_default().push(u);
    }

    let mut out = Vec::new();
    let mut found = 0;
    let mut searched = 0;
    for hw in pool {
        if found >= cfg.stop_at_headwords {
            break;
        }
        searched += 1;
        let Some(list) = by_headword.get(hw) else {
            continue;
        };
        found += 1;
        let mut picked: Vec<usize> = (0..list.len()).collect();
        picked.shuffle(&mut rng);
        picked.truncate(cfg.max_usages_per_headword);
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| list[i].clone()));
    }
    PhaseSample {
        usages: out,
        headwords_found: found,
        headwords_searched: searched,
        shortfall: found < cfg.stop_at_headwords,
    }
}
