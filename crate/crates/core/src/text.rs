//! Character-offset helpers.
//!
//! Spans throughout the crate are counted in Unicode scalar values so that they
//! agree with the offsets used by the Python exporter.

use serde::{Deserialize, Serialize};

/// Half-open `[start, end)` range of character offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the span is non-empty and lies within a text of `text_len` characters.
    pub fn is_valid_for(&self, text_len: usize) -> bool {
        self.start < self.end && self.end <= text_len
    }
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn byte_offset(s: &str, char_idx: usize) -> usize {
    s.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(s.len())
}

/// Substring by character span. Returns `None` if the span is out of range.
pub fn slice(s: &str, span: Span) -> Option<&str> {
    if span.start > span.end || span.end > char_len(s) {
        return None;
    }
    Some(&s[byte_offset(s, span.start)..byte_offset(s, span.end)])
}

/// Replace the characters covered by `span` with `replacement`.
///
/// Returns the new text and the span now covering `replacement`.
pub fn replace(s: &str, span: Span, replacement: &str) -> Option<(String, Span)> {
    if span.start > span.end || span.end > char_len(s) {
        return None;
    }
    let (a, b) = (byte_offset(s, span.start), byte_offset(s, span.end));
    let mut out = String::with_capacity(s.len() + replacement.len());
    out.push_str(&s[..a]);
    out.push_str(replacement);
    out.push_str(&s[b..]);
    let new_span = Span::new(span.start, span.start + char_len(replacement));
    Some((out, new_span))
}

/// Removes control characters, turning line breaks and tabs into single spaces.
///
/// Letters with diacritics are never touched.
pub fn clean(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c == '\n' || c == '\r' || c == '\t' {
            if !out.ends_with(' ') {
                out.push(' ');
            }
        } else if !c.is_control() {
            out.push(c);
        }
    }
    out.trim().to_string()
}
