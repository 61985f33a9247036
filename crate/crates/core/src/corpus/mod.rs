//! Corpus derivation: from raw sentences to filtered, split, indexed
//! `⟨context, term set⟩` records.

mod annotate;
mod filter;
pub mod hearst;
mod lemma;
mod split;
mod vocab;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use annotate::{annotate, decompose, strip_hypernym, AnnotatedSentence};
pub use filter::{filter_corpus, FilterConfig};
pub use hearst::{match_hearst, PatternId, PatternMatch, PrecisionTable};
pub use lemma::lemmatize;
pub use split::{split, split_sizes};
pub use vocab::{build_lexicon, build_vocab, TermLexicon, Vocabulary};

/// Literal token marking the slot in a context.
pub const PLACEHOLDER: &str = "PLACEHOLDER";

/// A lowercased, lemmatized sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub id: String,
    pub tokens: Vec<String>,
}

const EDGE_PUNCT: &[char] = &[',', '.', ';', ':', '!', '?', '(', ')', '"'];

impl RawSentence {
    /// Tokenizes on whitespace, splits punctuation off word edges, then
    /// lowercases and lemmatizes every token.
    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        let mut tokens = Vec::new();
        for raw in text.split_whitespace() {
            let mut word = raw;
            let mut lead = Vec::new();
            while let Some(c) = word.chars().next().filter(|c| EDGE_PUNCT.contains(c)) {
                lead.push(c.to_string());
                word = &word[c.len_utf8()..];
            }
            let mut trail = Vec::new();
            while let Some(c) = word.chars().next_back().filter(|c| EDGE_PUNCT.contains(c)) {
                trail.push(c.to_string());
                word = &word[..word.len() - c.len_utf8()];
            }
            tokens.extend(lead);
            if !word.is_empty() {
                tokens.push(if word == PLACEHOLDER { word.to_string() } else { lemmatize(word) });
            }
            tokens.extend(trail.into_iter().rev());
        }
        RawSentence { id: id.into(), tokens }
    }
}
