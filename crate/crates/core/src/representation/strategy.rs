//! Replacement strategies that give glosses and examples a target span.
//!
//! | strategy | pattern        | example                            |
//! |----------|----------------|------------------------------------|
//! | 0        | as is          | a poor salary                      |
//! | 1        | `HW: SEQ`      | inadequate: a poor salary          |
//! | 2        | `SEQ (HW)`     | a poor salary (inadequate)         |
//! | 3        | `SEQ, i.e., HW`| a poor salary, i.e., inadequate    |
//! | 4        | replace word   | a inadequate salary                |
//!
//! Strategy 4 substitutes the raw headword without fixing agreement, and falls
//! back to strategy 2 when no synset member occurs in the sequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Lemmatizer;
use crate::text::{self, char_len, Span};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("unknown replacement strategy {0} (expected 0..=4)")]
    Unknown(u8),
    #[error("span {start}..{end} is not valid in a text of {len} characters")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("headword is empty")]
    EmptyHeadword,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    AsIs,
    Prefix,
    Parenthesis,
    Apposition,
    Replace,
}

impl Strategy {
    pub fn index(self) -> u8 {
        match self {
            Strategy::AsIs => 0,
            Strategy::Prefix => 1,
            Strategy::Parenthesis => 2,
            Strategy::Apposition => 3,
            Strategy::Replace => 4,
        }
    }
}

impl TryFrom<u8> for Strategy {
    type Error = StrategyError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Ok(match v {
            0 => Strategy::AsIs,
            1 => Strategy::Prefix,
            2 => Strategy::Parenthesis,
            3 => Strategy::Apposition,
            4 => Strategy::Replace,
            other => return Err(StrategyError::Unknown(other)),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    English,
    Swedish,
}

impl Language {
    /// `sv`, `swe` and `swedish` map to Swedish; anything else to English.
    pub fn from_tag(tag: &str) -> Self {
        match tag.to_ascii_lowercase().as_str() {
            "sv" | "swe" | "swedish" => Language::Swedish,
            _ => Language::English,
        }
    }

    pub fn connective(self) -> &'static str {
        match self {
            Language::English => "i.e.",
            Language::Swedish => "dvs.",
        }
    }
}

/// A text ready for the encoder with its focus span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prepared {
    pub text: String,
    pub span: Span,
}

pub fn apply_strategy(
    strategy: Strategy,
    headword: &str,
    sequence: &str,
    contained: Option<Span>,
    lang: Language,
) -> Result<Prepared, StrategyError> {
    if headword.is_empty() {
        return Err(StrategyError::EmptyHeadword);
    }
    let seq_len = char_len(sequence);
    if let Some(sp) = contained {
        if !sp.is_valid_for(seq_len) {
            return Err(StrategyError::InvalidSpan {
                start: sp.start,
                end: sp.end,
                len: seq_len,
            });
        }
    }
    let hw_len = char_len(headword);
    let appended = |text: String| {
        let end = char_len(&text);
        Prepared {
            span: Span::new(end - hw_len, end),
            text,
        }
    };
    Ok(match strategy {
        Strategy::AsIs => Prepared {
            text: sequence.to_string(),
            span: contained.unwrap_or(Span::new(0, seq_len)),
        },
        Strategy::Prefix => Prepared {
            text: format!("{headword}: {sequence}"),
            span: Span::new(0, hw_len),
        },
        Strategy::Parenthesis => Prepared {
            span: Span::new(seq_len + 2, seq_len + 2 + hw_len),
            text: format!("{sequence} ({headword})"),
        },
        Strategy::Apposition => appended(format!("{sequence}, {}, {headword}", lang.connective())),
        Strategy::Replace => match contained {
            Some(sp) => {
                // span validated above
                let (text, span) = text::replace(sequence, sp, headword).expect("valid span");
                Prepared { text, span }
            }
            None => apply_strategy(Strategy::Parenthesis, headword, sequence, None, lang)?,
        },
    })
}

/// First left-to-right occurrence of any candidate word (or word sequence) in
/// `sequence`, comparing lowercased token text and lemmas.
pub fn locate_target(sequence: &str, candidates: &[&str], lemmatizer: &dyn Lemmatizer) -> Option<Span> {
    let tokens = lemmatizer.tokenize(sequence).ok()?;
    let forms: Vec<(String, String)> = tokens
        .iter()
        .map(|t| {
            let lower = t.text.to_lowercase();
            let lemma = lemmatizer.lemma(&t.text).unwrap_or_else(|_| lower.clone());
            (lower, lemma)
        })
        .collect();
    let candidates: Vec<Vec<String>> = candidates
        .iter()
        .map(|c| c.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
        .filter(|c| !c.is_empty())
        .collect();
    for i in 0..tokens.len() {
        for cand in &candidates {
            let end = i + cand.len();
            if end > tokens.len() {
                continue;
            }
            let hit = forms[i..end]
                .iter()
                .zip(cand)
                .all(|((lower, lemma), w)| lower == w || lemma.to_lowercase() == *w);
            if hit {
                return Some(Span::new(tokens[i].span.start, tokens[end - 1].span.end));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LowercaseLemmatizer;

    const HW: &str = "inadequate";
    const SEQ: &str = "a poor salary";
    const POOR: Span = Span { start: 2, end: 6 };

    fn run(k: u8, contained: Option<Span>) -> Prepared {
        apply_strategy(Strategy::try_from(k).unwrap(), HW, SEQ, contained, Language::English).unwrap()
    }

    #[test]
    fn table_of_strategies() {
        assert_eq!(run(0, None).text, "a poor salary");
        assert_eq!(run(1, None).text, "inadequate: a poor salary");
        assert_eq!(run(2, None).text, "a poor salary (inadequate)");
        assert_eq!(run(3, None).text, "a poor salary, i.e., inadequate");
        assert_eq!(run(4, Some(POOR)).text, "a inadequate salary");
        for k in 1..=4 {
            let p = run(k, Some(POOR));
            assert_eq!(text::slice(&p.text, p.span), Some(HW), "strategy {k}");
        }
    }

    #[test]
    fn identity_strategy_spans() {
        let p = apply_strategy(Strategy::AsIs, "x", "y z", None, Language::English).unwrap();
        assert_eq!((p.text.as_str(), p.span), ("y z", Span::new(0, 3)));
        assert_eq!(run(0, Some(POOR)).span, POOR);
    }

    #[test]
    fn replace_falls_back_to_parenthesis() {
        assert_eq!(run(4, None), run(2, None));
    }

    #[test]
    fn swedish_connective() {
        let p = apply_strategy(Strategy::Apposition, "svindel", "yrsel", None, Language::Swedish).unwrap();
        assert_eq!(p.text, "yrsel, dvs., svindel");
        assert_eq!(text::slice(&p.text, p.span), Some("svindel"));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Strategy::try_from(5), Err(StrategyError::Unknown(5)));
        assert!(matches!(
            apply_strategy(Strategy::Replace, HW, SEQ, Some(Span::new(10, 20)), Language::English),
            Err(StrategyError::InvalidSpan { .. })
        ));
        assert!(apply_strategy(Strategy::Prefix, "", SEQ, None, Language::English).is_err());
    }

    #[test]
    fn locate_first_member() {
        let lem = LowercaseLemmatizer;
        assert_eq!(locate_target(SEQ, &["inadequate", "poor"], &lem), Some(POOR));
        assert_eq!(
            locate_target("Poor and inadequate pay", &["inadequate", "poor"], &lem),
            Some(Span::new(0, 4))
        );
        assert_eq!(locate_target(SEQ, &["meagre"], &lem), None);
        assert_eq!(locate_target("a cable car", &["cable car"], &lem), Some(Span::new(2, 11)));
    }
}
