//! Deterministic suffix-rule English lemmatizer.
//!
//! Handles regular plural nouns and `-ing`/`-ed` verb forms, with a small
//! exceptions table for irregular and protected words. The single-step rule
//! is applied until it reaches a fixed point, so `lemma(lemma(w)) == lemma(w)`
//! holds for every input.

use alloc::string::{String, ToString};

/// Irregular forms and words the suffix rules would mangle.
const EXCEPTIONS: &[(&str, &str)] = &[
    ("analyses", "analysis"),
    ("anything", "anything"),
    ("bus", "bus"),
    ("ceiling", "ceiling"),
    ("children", "child"),
    ("criteria", "criterion"),
    ("data", "data"),
    ("during", "during"),
    ("evening", "evening"),
    ("everything", "everything"),
    ("feet", "foot"),
    ("geese", "goose"),
    ("hundred", "hundred"),
    ("including", "including"),
    ("indeed", "indeed"),
    ("king", "king"),
    ("lens", "lens"),
    ("men", "man"),
    ("mice", "mouse"),
    ("morning", "morning"),
    ("news", "news"),
    ("nothing", "nothing"),
    ("people", "person"),
    ("phenomena", "phenomenon"),
    ("ring", "ring"),
    ("series", "series"),
    ("something", "something"),
    ("species", "species"),
    ("spring", "spring"),
    ("string", "string"),
    ("teeth", "tooth"),
    ("thing", "thing"),
    ("this", "this"),
    ("used", "use"),
    ("was", "was"),
    ("wing", "wing"),
    ("women", "woman"),
];

fn exception(word: &str) -> Option<&'static str> {
    EXCEPTIONS
        .binary_search_by(|(k, _)| (*k).cmp(word))
        .ok()
        .map(|i| EXCEPTIONS[i].1)
}

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Lowercases and lemmatizes one token.
pub fn lemmatize(token: &str) -> String {
    let mut word = token.to_lowercase();
    loop {
        let next = step(&word);
        if next == word {
            return word;
        }
        word = next;
    }
}

/// One application of the rule set. Every rule either leaves the word alone
/// or strictly shortens it (e-restoration never outgrows the removed suffix),
/// so iteration terminates.
fn step(word: &str) -> String {
    if let Some(lemma) = exception(word) {
        return lemma.to_string();
    }
    let bytes = word.as_bytes();
    if bytes.len() <= 3 || !bytes.iter().all(|b| b.is_ascii_lowercase() || *b == b'-') {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            return alloc::format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("sses") {
        return alloc::format!("{stem}ss");
    }
    for suffix in ["xes", "ches", "shes", "zzes"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            return alloc::format!("{stem}{}", &suffix[..suffix.len() - 2]);
        }
    }
    if word.ends_with('s') && !(word.ends_with("ss") || word.ends_with("us") || word.ends_with("is")) {
        return word[..word.len() - 1].to_string();
    }
    if let Some(stem) = word.strip_suffix("ied") {
        if stem.len() >= 2 {
            return alloc::format!("{stem}y");
        }
    }
    let verb_stem = word
        .strip_suffix("ing")
        .or_else(|| word.strip_suffix("ed").filter(|s| !s.ends_with('e')));
    if let Some(stem) = verb_stem {
        let sb = stem.as_bytes();
        if sb.len() >= 3 && sb.iter().any(|b| is_vowel(*b) || *b == b'y') {
            return restore_stem(stem);
        }
    }
    word.to_string()
}

fn restore_stem(stem: &str) -> String {
    let sb = stem.as_bytes();
    let n = sb.len();
    let last = sb[n - 1];
    // running -> run, stopped -> stop
    if n >= 4 && last == sb[n - 2] && !is_vowel(last) && !matches!(last, b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    // housing -> house, living -> live, creating -> create
    let needs_e = stem.ends_with("at")
        || stem.ends_with("bl")
        || stem.ends_with("iz")
        || stem.ends_with("dg")
        || matches!(last, b'v' | b'c')
        || ((last == b's' || last == b'z')
            && is_vowel(sb[n - 2])
            && (!stem.ends_with("us") || is_vowel(sb[n - 3])));
    if needs_e {
        alloc::format!("{stem}e")
    } else {
        stem.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exceptions_are_sorted() {
        assert!(EXCEPTIONS.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn plurals() {
        for (w, l) in [
            ("vitamins", "vitamin"),
            ("antioxidants", "antioxidant"),
            ("enzymes", "enzyme"),
            ("minerals", "mineral"),
            ("acids", "acid"),
            ("phyto-nutrients", "phyto-nutrient"),
            ("berries", "berry"),
            ("classes", "class"),
            ("boxes", "box"),
            ("churches", "church"),
            ("days", "day"),
            ("children", "child"),
            ("Dogs", "dog"),
        ] {
            assert_eq!(lemmatize(w), l, "{w}");
        }
    }

    #[test]
    fn verbs() {
        for (w, l) in [
            ("sleeps", "sleep"),
            ("running", "run"),
            ("stopped", "stop"),
            ("walked", "walk"),
            ("housing", "house"),
            ("creating", "create"),
            ("studied", "study"),
            ("dressing", "dress"),
            ("focusing", "focus"),
            ("causing", "cause"),
        ] {
            assert_eq!(lemmatize(w), l, "{w}");
        }
    }

    #[test]
    fn protected_short_and_function_words() {
        for w in ["is", "as", "has", "such", "other", "and", "high", "young", "grass", "this", ",", "."] {
            assert_eq!(lemmatize(w), w, "{w}");
        }
        assert_eq!(lemmatize("especially"), "especially");
        assert_eq!(lemmatize("including"), "including");
    }

    proptest! {
        #[test]
        fn idempotent(word in "[a-z-]{1,14}") {
            let once = lemmatize(&word);
            prop_assert_eq!(lemmatize(&once), once);
        }
    }
}
