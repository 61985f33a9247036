use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{AnnotatedSentence, PLACEHOLDER};
use crate::{Error, Result};

/// Word ↔ id map with reserved ids for padding, unknown words and the
/// placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    min_freq: usize,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const OOV: usize = 1;
    pub const PLACEHOLDER: usize = 2;
    pub const PAD_TOKEN: &'static str = "<pad>";
    pub const OOV_TOKEN: &'static str = "<oov>";
    const SPECIALS: [&'static str; 3] = [Self::PAD_TOKEN, Self::OOV_TOKEN, PLACEHOLDER];

    /// Builds a vocabulary from token counts: words seen at least `min_freq`
    /// times get their own id, ordered by descending count then by word.
    pub fn from_counts<'a>(tokens: impl IntoIterator<Item = &'a str>, min_freq: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in tokens {
            if !Self::SPECIALS.contains(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_freq).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let words = Self::SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(w, _)| w.to_string()))
            .collect();
        let mut v = Self::from_word_list(words).expect("specials are always present");
        v.min_freq = min_freq;
        v
    }

    /// Rebuilds a vocabulary from its id-ordered word list.
    pub fn from_word_list(words: Vec<String>) -> Result<Self> {
        if words.len() < 3 || words[..3] != Self::SPECIALS {
            return Err(Error::InvalidArgument("vocabulary must start with the reserved tokens".into()));
        }
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(alloc::format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Vocabulary { words, index, min_freq: 0 })
    }

    /// Id of a word; unknown words map to [`Vocabulary::OOV`].
    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(Self::OOV)
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= Self::SPECIALS.len()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }
}

/// Context-word vocabulary over training contexts; words seen fewer than
/// `min_freq` times become OOV.
pub fn build_vocab(train: &[AnnotatedSentence], min_freq: usize) -> Vocabulary {
    Vocabulary::from_counts(train.iter().flat_map(|r| r.context.iter().map(String::as_str)), min_freq)
}

/// The label set: every term of every training sentence, with the number of
/// training sentences that contain it. Label ids are frequency ranks
/// (descending count, ties by term), so id 0 is the most frequent term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermLexicon {
    terms: Vec<String>,
    freqs: Vec<usize>,
    index: BTreeMap<String, usize>,
}

impl TermLexicon {
    /// Rebuilds a lexicon from `(term, frequency)` pairs in rank order.
    pub fn from_ranked(entries: Vec<(String, usize)>) -> Result<Self> {
        if entries.windows(2).any(|w| (w[0].1, &w[1].0) < (w[1].1, &w[0].0)) {
            return Err(Error::InvalidArgument("lexicon entries are not in rank order".into()));
        }
        let mut index = BTreeMap::new();
        for (i, (t, _)) in entries.iter().enumerate() {
            if t.is_empty() || index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidArgument(alloc::format!("bad or duplicate term `{t}`")));
            }
        }
        let (terms, freqs) = entries.into_iter().unzip();
        Ok(TermLexicon { terms, freqs, index })
    }

    pub fn label(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, label: usize) -> &str {
        &self.terms[label]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn freq(&self, label: usize) -> usize {
        self.freqs[label]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Frequency rank of a label (identical to the label id).
    pub fn rank(&self, label: usize) -> usize {
        label
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.terms.iter().map(String::as_str).zip(self.freqs.iter().copied())
    }
}

pub fn build_lexicon(train: &[AnnotatedSentence]) -> TermLexicon {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for rec in train {
        let distinct: BTreeSet<&str> = rec.terms.iter().map(String::as_str).collect();
        for t in distinct {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    TermLexicon::from_ranked(ranked).expect("ranked entries are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(context: &str, terms: &[&str]) -> AnnotatedSentence {
        AnnotatedSentence {
            id: "r".into(),
            context: context.split(' ').map(ToString::to_string).collect(),
            terms: terms.iter().map(|t| t.to_string()).collect(),
            hypernym_span: None,
        }
    }

    #[test]
    fn empty_corpus_has_only_specials() {
        let v = build_vocab(&[], 5);
        assert_eq!(v.len(), 3);
        assert!(v.is_empty());
        assert_eq!(v.id(PLACEHOLDER), Vocabulary::PLACEHOLDER);
        assert_eq!(v.id("anything"), Vocabulary::OOV);
    }

    #[test]
    fn min_freq_boundary() {
        let mut recs = Vec::new();
        for _ in 0..4 {
            recs.push(rec("four five PLACEHOLDER", &["a"]));
        }
        recs.push(rec("five PLACEHOLDER", &["a"]));
        let v = build_vocab(&recs, 5);
        assert_eq!(v.id("four"), Vocabulary::OOV);
        assert_eq!(v.id("five"), 3);
        assert_eq!(v.words(), ["<pad>", "<oov>", "PLACEHOLDER", "five"]);
    }

    #[test]
    fn word_list_roundtrip() {
        let v = build_vocab(&[rec("b a a b c PLACEHOLDER", &["x"])], 1);
        assert_eq!(Vocabulary::from_word_list(v.words().to_vec()).unwrap().words(), v.words());
        assert!(Vocabulary::from_word_list(vec!["x".into()]).is_err());
    }

    #[test]
    fn lexicon_ranks_by_frequency() {
        let recs = [
            rec("PLACEHOLDER", &["b", "a", "c"]),
            rec("PLACEHOLDER", &["a", "c", "a"]),
            rec("PLACEHOLDER", &["a", "d", "e"]),
        ];
        let lex = build_lexicon(&recs);
        assert_eq!(lex.terms(), ["a", "c", "b", "d", "e"]);
        assert_eq!(lex.freq(0), 3);
        assert_eq!(lex.label("c"), Some(1));
        assert_eq!(lex.label("zzz"), None);
        let rebuilt = TermLexicon::from_ranked(lex.entries().map(|(t, f)| (t.to_string(), f)).collect()).unwrap();
        assert_eq!(rebuilt, lex);
        assert!(TermLexicon::from_ranked(vec![("a".into(), 1), ("b".into(), 2)]).is_err());
    }
}
