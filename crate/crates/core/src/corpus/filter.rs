use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::AnnotatedSentence;

/// Quality thresholds for corpus filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Minimum pattern precision for a high-quality sentence.
    pub min_precision: f64,
    /// Minimum hyponym count for a high-quality sentence.
    pub min_hyponyms: usize,
    /// A term is high quality when it appears in at least this many
    /// high-quality sentences.
    pub min_term_sentences: usize,
    /// Minimum number of high-quality terms a kept sentence must carry.
    pub min_quality_terms: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_precision: 0.5,
            min_hyponyms: 3,
            min_term_sentences: 10,
            min_quality_terms: 3,
        }
    }
}

/// Keeps high-quality sentences restricted to their high-quality terms.
///
/// One pass of the rules can leave a term supported by fewer than
/// `min_term_sentences` surviving sentences, so the term/sentence rules are
/// repeated until nothing changes. The result is a fixed point, which makes
/// the filter idempotent.
pub fn filter_corpus(records: &[(AnnotatedSentence, f64)], cfg: &FilterConfig) -> Vec<AnnotatedSentence> {
    let mut current: Vec<AnnotatedSentence> = records
        .iter()
        .filter(|(rec, precision)| *precision >= cfg.min_precision && rec.terms.len() >= cfg.min_hyponyms)
        .map(|(rec, _)| rec.clone())
        .collect();
    loop {
        let mut support: BTreeMap<&str, usize> = BTreeMap::new();
        for rec in &current {
            let distinct: BTreeSet<&str> = rec.terms.iter().map(|t| t.as_str()).collect();
            for t in distinct {
                *support.entry(t).or_default() += 1;
            }
        }
        let quality = |t: &str| support.get(t).is_some_and(|n| *n >= cfg.min_term_sentences);
        let next: Vec<AnnotatedSentence> = current
            .iter()
            .filter_map(|rec| {
                let terms: Vec<_> = rec.terms.iter().filter(|t| quality(t)).cloned().collect();
                (terms.len() >= cfg.min_quality_terms).then(|| AnnotatedSentence { terms, ..rec.clone() })
            })
            .collect();
        if next == current {
            return next;
        }
        current = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn rec(id: usize, terms: &[&str]) -> AnnotatedSentence {
        AnnotatedSentence {
            id: format!("{id}"),
            context: vec!["x".to_string(), super::super::PLACEHOLDER.to_string()],
            terms: terms.iter().map(|t| t.to_string()).collect(),
            hypernym_span: None,
        }
    }

    #[test]
    fn empty_input() {
        assert!(filter_corpus(&[], &FilterConfig::default()).is_empty());
    }

    #[test]
    fn thresholds() {
        let cfg = FilterConfig::default();
        let mut records = Vec::new();
        // a, b, c appear in 10 good sentences; d only in 9.
        for i in 0..9 {
            records.push((rec(i, &["a", "b", "c", "d"]), 0.7));
        }
        records.push((rec(9, &["a", "b", "c"]), 0.7));
        // Low precision and short lists never count.
        records.push((rec(10, &["a", "b", "d"]), 0.4));
        records.push((rec(11, &["a", "d"]), 0.9));
        let out = filter_corpus(&records, &cfg);
        assert_eq!(out.len(), 10);
        for r in &out {
            assert_eq!(r.terms, ["a", "b", "c"]);
        }
    }

    #[test]
    fn cascades_to_a_fixed_point() {
        let cfg = FilterConfig::default();
        let mut records = Vec::new();
        for i in 0..10 {
            records.push((rec(i, &["a", "b", "c"]), 0.7));
        }
        // `e` reaches 10 sentences only thanks to two sentences that lose
        // their other terms in the first round.
        for i in 10..18 {
            records.push((rec(i, &["a", "b", "e"]), 0.7));
        }
        records.push((rec(18, &["e", "x", "y"]), 0.7));
        records.push((rec(19, &["e", "z", "w"]), 0.7));
        let out = filter_corpus(&records, &cfg);
        assert!(out.iter().all(|r| !r.terms.contains(&"e".to_string())));
        assert_eq!(out.len(), 10);
        let again: Vec<_> = out.iter().map(|r| (r.clone(), 1.0)).collect();
        assert_eq!(filter_corpus(&again, &cfg), out);
    }

    #[test]
    fn output_invariants() {
        let cfg = FilterConfig::default();
        let records: Vec<_> = (0..60)
            .map(|i| {
                let terms: Vec<String> = (0..(3 + i % 3)).map(|k| format!("t{}", (i * 7 + k * 3) % 13)).collect();
                let refs: Vec<&str> = terms.iter().map(|s| s.as_str()).collect();
                (rec(i, &refs), if i % 5 == 0 { 0.3 } else { 0.8 })
            })
            .collect();
        let out = filter_corpus(&records, &cfg);
        let mut support: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &out {
            assert!(r.terms.len() >= 3);
            for t in &r.terms {
                *support.entry(t).or_default() += 1;
            }
        }
        assert!(support.values().all(|n| *n >= 10));
    }
}
