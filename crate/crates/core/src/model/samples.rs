use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{AnnotatedSentence, PLACEHOLDER};
use crate::{Error, Result};

/// One training or test instance: a seed, its co-listed terms and the
/// context they share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample<'a> {
    pub record: &'a AnnotatedSentence,
    pub seed: &'a str,
    pub targets: Vec<&'a str>,
}

/// Every term of a record in turn as the seed, the rest as targets.
pub fn samples_from_sentence(rec: &AnnotatedSentence) -> Result<Vec<Sample<'_>>> {
    if rec.terms.len() < 2 {
        return Err(Error::InvalidArgument(alloc::format!("record {} has fewer than two terms", rec.id)));
    }
    Ok(rec
        .terms
        .iter()
        .map(|s| Sample {
            record: rec,
            seed: s,
            targets: rec.terms.iter().filter(|t| *t != s).map(String::as_str).collect(),
        })
        .collect())
}

/// Cuts `tokens` to at most `max_len` positions, keeping a window centred
/// on the placeholder. Returns the kept range.
pub fn trim_window(len: usize, placeholder: usize, max_len: usize) -> core::ops::Range<usize> {
    if len <= max_len {
        return 0..len;
    }
    let start = placeholder.saturating_sub(max_len / 2);
    let end = (start + max_len).min(len);
    end - max_len..end
}

/// Position of the single placeholder in a token sequence.
pub fn find_placeholder<S: AsRef<str>>(context: &[S]) -> Result<usize> {
    let mut it = context.iter().enumerate().filter(|(_, t)| t.as_ref() == PLACEHOLDER).map(|(i, _)| i);
    match (it.next(), it.next()) {
        (Some(p), None) => Ok(p),
        (None, _) => Err(Error::InvalidArgument("context has no placeholder".into())),
        _ => Err(Error::InvalidArgument("context has more than one placeholder".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(terms: &[&str]) -> AnnotatedSentence {
        AnnotatedSentence {
            id: "r".into(),
            context: vec!["x".to_string(), PLACEHOLDER.to_string()],
            terms: terms.iter().map(|t| t.to_string()).collect(),
            hypernym_span: None,
        }
    }

    #[test]
    fn one_sample_per_term() {
        let r = rec(&["a", "b", "c"]);
        let s = samples_from_sentence(&r).unwrap();
        let got: Vec<(&str, Vec<&str>)> = s.iter().map(|x| (x.seed, x.targets.clone())).collect();
        assert_eq!(got, [("a", vec!["b", "c"]), ("b", vec!["a", "c"]), ("c", vec!["a", "b"])]);
        assert_eq!(samples_from_sentence(&rec(&["a", "b"])).unwrap().len(), 2);
        assert!(samples_from_sentence(&rec(&["a"])).is_err());
    }

    #[test]
    fn window_keeps_placeholder() {
        assert_eq!(trim_window(10, 3, 20), 0..10);
        assert_eq!(trim_window(300, 150, 100), 100..200);
        assert_eq!(trim_window(300, 10, 100), 0..100);
        assert_eq!(trim_window(300, 295, 100), 200..300);
        for p in 0..300 {
            let w = trim_window(300, p, 100);
            assert!(w.contains(&p) && w.len() == 100);
        }
    }

    #[test]
    fn placeholder_lookup() {
        assert_eq!(find_placeholder(&["a", PLACEHOLDER]).unwrap(), 1);
        assert!(find_placeholder(&["a"]).is_err());
        assert!(find_placeholder(&[PLACEHOLDER, PLACEHOLDER]).is_err());
    }
}
