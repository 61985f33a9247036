//! Hearst-pattern matching over lemmatized token sequences.
//!
//! Six lexical templates are recognised, with `H` the hypernym noun phrase
//! and `T1..Tk` the hyponym list:
//!
//! | id           | template                          |
//! |--------------|-----------------------------------|
//! | `such_as`    | `H such as T1 , T2 ( , and/or Tk )` |
//! | `such_h_as`  | `such H as T1 , T2 ...`           |
//! | `including`  | `H including T1 , T2 ...`         |
//! | `especially` | `H especially T1 , T2 ...`        |
//! | `and_other`  | `T1 , T2 ... and other H`         |
//! | `or_other`   | `T1 , T2 ... or other H`          |
//!
//! Noun phrases are maximal runs of content tokens (anything that is neither
//! a separator nor a function word), capped at [`MAX_NP_WORDS`] tokens kept
//! nearest the pattern anchor.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use super::RawSentence;
use crate::{Error, Result};

/// Longest noun phrase accepted in any slot.
pub const MAX_NP_WORDS: usize = 4;

const SEPARATORS: &[&str] = &[",", ";", ":", ".", "!", "?", "(", ")", "\"", "'", "`", "--", "/"];

const CONJUNCTIONS: &[&str] = &["and", "or"];

/// Function words that may never be part of a noun phrase.
const FUNCTION_WORDS: &[&str] = &[
    "a", "about", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "been", "being",
    "but", "by", "can", "could", "did", "do", "does", "each", "especially", "etc", "every", "few",
    "for", "from", "had", "has", "have", "he", "her", "here", "his", "how", "i", "in", "include",
    "including", "into", "is", "it", "its", "like", "many", "may", "might", "more", "most", "much",
    "must", "my", "no", "nor", "not", "of", "on", "onto", "or", "other", "our", "over", "several",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "those", "to", "under", "various", "very", "was", "we",
    "were", "what", "when", "where", "which", "who", "whom", "whose", "will", "with", "would",
    "you", "your",
];

pub(crate) fn is_separator(token: &str) -> bool {
    SEPARATORS.contains(&token)
}

fn is_conjunction(token: &str) -> bool {
    CONJUNCTIONS.contains(&token)
}

fn is_content(token: &str) -> bool {
    !is_separator(token) && FUNCTION_WORDS.binary_search(&token).is_err()
}

/// Identifier of one of the six supported templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternId {
    SuchAs,
    SuchHAs,
    Including,
    Especially,
    AndOther,
    OrOther,
}

impl PatternId {
    pub const ALL: [PatternId; 6] = [
        PatternId::SuchAs,
        PatternId::SuchHAs,
        PatternId::Including,
        PatternId::Especially,
        PatternId::AndOther,
        PatternId::OrOther,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::SuchAs => "such_as",
            PatternId::SuchHAs => "such_h_as",
            PatternId::Including => "including",
            PatternId::Especially => "especially",
            PatternId::AndOther => "and_other",
            PatternId::OrOther => "or_other",
        }
    }

    /// Whether the hyponym list precedes the hypernym.
    pub fn hyponyms_first(self) -> bool {
        matches!(self, PatternId::AndOther | PatternId::OrOther)
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PatternId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown pattern id `{s}`")))
    }
}

/// Precision of each template, as estimated by whoever built the extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionTable {
    values: BTreeMap<PatternId, f64>,
}

impl PrecisionTable {
    /// Default precision assigned to every template.
    pub const DEFAULT_PRECISION: f64 = 0.7;

    pub fn new() -> Self {
        PrecisionTable { values: BTreeMap::new() }
    }

    pub fn set(&mut self, pattern: PatternId, precision: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&precision) {
            return Err(Error::InvalidArgument(alloc::format!(
                "precision {precision} for `{pattern}` outside [0, 1]"
            )));
        }
        self.values.insert(pattern, precision);
        Ok(())
    }

    /// Precision of a pattern; patterns missing from the table count as 0.
    pub fn get(&self, pattern: PatternId) -> f64 {
        self.values.get(&pattern).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PatternId, f64)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }
}

impl Default for PrecisionTable {
    fn default() -> Self {
        let values = PatternId::ALL
            .into_iter()
            .map(|p| (p, Self::DEFAULT_PRECISION))
            .collect();
        PrecisionTable { values }
    }
}

/// One template instance found in a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatch {
    pub pattern: PatternId,
    pub hypernym_span: Range<usize>,
    pub hyponym_spans: Vec<Range<usize>>,
    pub precision: f64,
}

impl PatternMatch {
    /// Token range covered by the hypernym, the connectives and the list.
    pub fn extent(&self) -> Range<usize> {
        let first = self.hyponym_spans.first().map_or(usize::MAX, |r| r.start);
        let last = self.hyponym_spans.last().map_or(0, |r| r.end);
        self.hypernym_span.start.min(first)..self.hypernym_span.end.max(last)
    }

    /// Checks the span invariants against a sentence of `len` tokens.
    pub fn validate(&self, len: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::MalformedMatch(alloc::format!("{}: {msg}", self.pattern)));
        if self.hyponym_spans.is_empty() {
            return bad("no hyponyms");
        }
        let h = &self.hypernym_span;
        if h.start >= h.end || h.end > len {
            return bad("hypernym span out of range");
        }
        let mut prev_end = 0;
        for (i, span) in self.hyponym_spans.iter().enumerate() {
            if span.start >= span.end || span.end > len {
                return bad("hyponym span out of range");
            }
            if i > 0 && span.start < prev_end {
                return bad("hyponym spans overlap or are out of order");
            }
            if span.start < h.end && h.start < span.end {
                return bad("hyponym span overlaps the hypernym");
            }
            prev_end = span.end;
        }
        Ok(())
    }
}

fn np_right(tokens: &[String], start: usize) -> Option<Range<usize>> {
    let len = tokens[start.min(tokens.len())..]
        .iter()
        .take_while(|t| is_content(t))
        .count();
    (len > 0).then(|| start..start + len.min(MAX_NP_WORDS))
}

fn np_left(tokens: &[String], end: usize) -> Option<Range<usize>> {
    let len = tokens[..end].iter().rev().take_while(|t| is_content(t)).count();
    (len > 0).then(|| end - len.min(MAX_NP_WORDS)..end)
}

/// Hypernym phrase ending right before `anchor`, skipping one comma.
fn hypernym_before(tokens: &[String], anchor: usize) -> Option<Range<usize>> {
    let end = if anchor > 0 && tokens[anchor - 1] == "," { anchor - 1 } else { anchor };
    np_left(tokens, end)
}

/// Hyponym list read left to right starting at `start`.
fn list_rightward(tokens: &[String], mut pos: usize) -> Vec<Range<usize>> {
    let mut items = Vec::new();
    while let Some(np) = np_right(tokens, pos) {
        pos = np.end;
        items.push(np);
        match tokens.get(pos).map(String::as_str) {
            Some(",") => {
                pos += 1;
                if tokens.get(pos).is_some_and(|t| is_conjunction(t)) {
                    pos += 1;
                }
            }
            Some(t) if is_conjunction(t) => {
                if let Some(last) = np_right(tokens, pos + 1) {
                    items.push(last);
                }
                break;
            }
            _ => break,
        }
    }
    items
}

/// Hyponym list read right to left, ending right before the conjunction at
/// `anchor`.
fn list_leftward(tokens: &[String], anchor: usize) -> Vec<Range<usize>> {
    let mut end = anchor;
    if end > 0 && tokens[end - 1] == "," {
        end -= 1;
    }
    let mut items = Vec::new();
    while let Some(np) = np_left(tokens, end) {
        let start = np.start;
        items.push(np);
        if start > 0 && tokens[start - 1] == "," {
            end = start - 1;
        } else {
            break;
        }
    }
    items.reverse();
    items
}

fn candidates(tokens: &[String]) -> Vec<(PatternId, Range<usize>, Vec<Range<usize>>)> {
    let mut found = Vec::new();
    let at = |i: usize| tokens.get(i).map(String::as_str);
    for i in 0..tokens.len() {
        match at(i) {
            Some("such") if at(i + 1) == Some("as") => {
                if let Some(h) = hypernym_before(tokens, i) {
                    found.push((PatternId::SuchAs, h, list_rightward(tokens, i + 2)));
                }
            }
            Some("such") => {
                if let Some(h) = np_right(tokens, i + 1) {
                    if at(h.end) == Some("as") {
                        let list = list_rightward(tokens, h.end + 1);
                        found.push((PatternId::SuchHAs, h, list));
                    }
                }
            }
            Some(kw @ ("including" | "especially")) => {
                if let Some(h) = hypernym_before(tokens, i) {
                    let id = if kw == "including" { PatternId::Including } else { PatternId::Especially };
                    found.push((id, h, list_rightward(tokens, i + 1)));
                }
            }
            Some(conj @ ("and" | "or")) if at(i + 1) == Some("other") => {
                if let Some(h) = np_right(tokens, i + 2) {
                    let id = if conj == "and" { PatternId::AndOther } else { PatternId::OrOther };
                    found.push((id, h, list_leftward(tokens, i)));
                }
            }
            _ => {}
        }
    }
    found.retain(|(_, _, list)| !list.is_empty());
    found
}

/// Finds the non-overlapping Hearst matches in a sentence.
///
/// When two candidate matches overlap, the one with more hyponyms wins and
/// ties go to the leftmost. Results are ordered by position.
pub fn match_hearst(sentence: &RawSentence, precisions: &PrecisionTable) -> Vec<PatternMatch> {
    let mut all: Vec<PatternMatch> = candidates(&sentence.tokens)
        .into_iter()
        .map(|(pattern, hypernym_span, hyponym_spans)| PatternMatch {
            pattern,
            hypernym_span,
            hyponym_spans,
            precision: precisions.get(pattern),
        })
        .collect();
    all.sort_by(|a, b| {
        b.hyponym_spans
            .len()
            .cmp(&a.hyponym_spans.len())
            .then(a.extent().start.cmp(&b.extent().start))
    });
    let mut kept: Vec<PatternMatch> = Vec::new();
    for m in all {
        let e = m.extent();
        if kept.iter().all(|k| {
            let o = k.extent();
            e.end <= o.start || o.end <= e.start
        }) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| m.extent().start);
    kept
}
