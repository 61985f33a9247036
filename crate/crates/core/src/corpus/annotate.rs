use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use super::hearst::{PatternMatch, PrecisionTable};
use super::{match_hearst, RawSentence, PLACEHOLDER};
use crate::{Error, Result};

/// A placeholder context together with the terms that filled the slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub id: String,
    /// Context tokens; exactly one of them is [`PLACEHOLDER`].
    pub context: Vec<String>,
    /// Hyponym terms, multi-word terms joined with `_`, in sentence order.
    pub terms: Vec<String>,
    /// Hypernym location inside `context`, if known.
    pub hypernym_span: Option<Range<usize>>,
}

impl AnnotatedSentence {
    pub fn placeholder_index(&self) -> Option<usize> {
        self.context.iter().position(|t| t == PLACEHOLDER)
    }

    /// Checks the record-level invariants (term-count thresholds excluded).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(alloc::format!("record {}: {m}", self.id)));
        if self.context.iter().filter(|t| *t == PLACEHOLDER).count() != 1 {
            return bad("context must contain exactly one placeholder");
        }
        if let Some(h) = &self.hypernym_span {
            if h.start >= h.end || h.end > self.context.len() {
                return bad("hypernym span outside the context");
            }
        }
        if self.terms.iter().any(|t| self.context.contains(t)) {
            return bad("a term appears verbatim in the context");
        }
        Ok(())
    }

    /// The original sentence with the term list put back at the placeholder,
    /// e.g. `... high in vitamin , enzyme and amino acid and other ...`.
    pub fn reinserted(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.context.len() + 3 * self.terms.len());
        for tok in &self.context {
            if tok != PLACEHOLDER {
                out.push(tok.clone());
                continue;
            }
            for (i, term) in self.terms.iter().enumerate() {
                if i > 0 {
                    out.push(if i + 1 == self.terms.len() { "and" } else { "," }.to_string());
                }
                out.extend(term.split('_').map(ToString::to_string));
            }
        }
        out
    }

    /// The context with a single term put at the placeholder.
    pub fn with_term(&self, term: &str) -> Vec<String> {
        let mut out = Vec::with_capacity(self.context.len() + 2);
        for tok in &self.context {
            if tok == PLACEHOLDER {
                out.extend(term.split('_').map(ToString::to_string));
            } else {
                out.push(tok.clone());
            }
        }
        out
    }
}

/// Turns one pattern match into a placeholder context plus term set.
///
/// The whole hyponym list (items and their separators) collapses into a
/// single placeholder at the first hyponym's position; the hypernym and the
/// connective words stay in the context. Terms that also occur verbatim
/// elsewhere in the context are dropped so the context never leaks them.
pub fn decompose(sentence: &RawSentence, m: &PatternMatch) -> Result<AnnotatedSentence> {
    let tokens = &sentence.tokens;
    m.validate(tokens.len())?;
    let first = &m.hyponym_spans[0];
    let last = &m.hyponym_spans[m.hyponym_spans.len() - 1];
    let mut region = first.start..last.end;
    if m.pattern.hyponyms_first()
        && tokens.get(region.end).is_some_and(|t| t == ",")
        && region.end + 1 < m.hypernym_span.start
    {
        // Oxford comma in `T1 , T2 , and other H`.
        region.end += 1;
    }
    if region.start < m.hypernym_span.end && m.hypernym_span.start < region.end {
        return Err(Error::MalformedMatch("hypernym inside the hyponym list".into()));
    }

    let mut context: Vec<String> = Vec::with_capacity(tokens.len() - region.len() + 1);
    context.extend_from_slice(&tokens[..region.start]);
    context.push(PLACEHOLDER.to_string());
    context.extend_from_slice(&tokens[region.end..]);

    let shift = region.len() - 1;
    let h = &m.hypernym_span;
    let hypernym_span = if h.start >= region.end { h.start - shift..h.end - shift } else { h.clone() };

    let mut terms: Vec<String> = Vec::with_capacity(m.hyponym_spans.len());
    for span in &m.hyponym_spans {
        let term = tokens[span.clone()].join("_");
        if !terms.contains(&term) && !context.contains(&term) {
            terms.push(term);
        }
    }

    Ok(AnnotatedSentence {
        id: sentence.id.clone(),
        context,
        terms,
        hypernym_span: Some(hypernym_span),
    })
}

/// Matches and decomposes a sentence, pairing every record with its
/// pattern precision. Records after the first get an `.k` id suffix.
pub fn annotate(sentence: &RawSentence, precisions: &PrecisionTable) -> Result<Vec<(AnnotatedSentence, f64)>> {
    match_hearst(sentence, precisions)
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut rec = decompose(sentence, m)?;
            if k > 0 {
                rec.id = alloc::format!("{}.{k}", sentence.id);
            }
            Ok((rec, m.precision))
        })
        .collect()
}

/// Removes the hypernym and the pattern's connective words from a context.
///
/// Returns the record and whether anything was stripped; records without a
/// known hypernym span come back unchanged.
pub fn strip_hypernym(record: &AnnotatedSentence) -> (AnnotatedSentence, bool) {
    let (Some(h), Some(p)) = (record.hypernym_span.clone(), record.placeholder_index()) else {
        return (record.clone(), false);
    };
    let remove = if h.end <= p {
        // H [such] as / including / especially PLACEHOLDER
        let start = if h.start > 0 && record.context[h.start - 1] == "such" { h.start - 1 } else { h.start };
        start..p
    } else {
        // PLACEHOLDER and/or other H
        p + 1..h.end
    };
    let mut context = Vec::with_capacity(record.context.len() - remove.len());
    context.extend_from_slice(&record.context[..remove.start]);
    context.extend_from_slice(&record.context[remove.end..]);
    let stripped = AnnotatedSentence {
        id: record.id.clone(),
        context,
        terms: record.terms.clone(),
        hypernym_span: None,
    };
    (stripped, true)
}
