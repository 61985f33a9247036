//! Synthetic corpora with planted answers.
//!
//! Terms are split into families, each family into classes and each class
//! into groups. A sentence lists terms from one group; its context holds
//! noise words and, optionally, a word naming the class and a word naming
//! the group. Terms can belong to several groups, so the seed alone may not
//! tell which group a sentence is about.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::corpus::{AnnotatedSentence, PLACEHOLDER};
use crate::{derive_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    pub families: usize,
    pub classes_per_family: usize,
    pub terms_per_class: usize,
    pub groups_per_class: usize,
    /// Number of classes each term belongs to within its family.
    pub memberships: usize,
    pub sentences: usize,
    pub terms_per_sentence: usize,
    pub noise_vocab: usize,
    pub noise_len: usize,
    pub class_words: bool,
    pub group_words: bool,
    /// Add a group word from another family as a distractor.
    pub distractor: bool,
    pub seed: u64,
}

impl PlantedConfig {
    /// Five classes of 40 terms, each term in two classes, with class and
    /// group words in every context.
    pub fn class_indicators() -> Self {
        PlantedConfig {
            families: 1,
            classes_per_family: 5,
            terms_per_class: 40,
            groups_per_class: 5,
            memberships: 2,
            sentences: 2000,
            terms_per_sentence: 4,
            noise_vocab: 50,
            noise_len: 6,
            class_words: true,
            group_words: true,
            distractor: false,
            seed: 0,
        }
    }

    /// Two families whose group words only matter for seeds of that family;
    /// every context also carries a group word of the other family.
    pub fn subclass_indicators() -> Self {
        PlantedConfig {
            families: 2,
            classes_per_family: 2,
            terms_per_class: 20,
            groups_per_class: 4,
            memberships: 2,
            sentences: 2000,
            terms_per_sentence: 4,
            noise_vocab: 50,
            noise_len: 6,
            class_words: false,
            group_words: true,
            distractor: true,
            seed: 0,
        }
    }

    /// Groups of co-listed terms in pure-noise contexts.
    pub fn cooccurrence() -> Self {
        PlantedConfig {
            families: 1,
            classes_per_family: 10,
            terms_per_class: 6,
            groups_per_class: 1,
            memberships: 1,
            sentences: 1000,
            terms_per_sentence: 4,
            noise_vocab: 50,
            noise_len: 8,
            class_words: false,
            group_words: false,
            distractor: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synthetic corpus: {m}")));
        if self.families == 0 || self.classes_per_family == 0 || self.groups_per_class == 0 || self.sentences == 0 {
            return bad("counts must be positive");
        }
        if self.memberships == 0 || self.memberships > self.classes_per_family {
            return bad("memberships must be between 1 and the number of classes");
        }
        if (self.classes_per_family * self.terms_per_class) % self.memberships != 0 {
            return bad("class slots must divide evenly among memberships");
        }
        if self.terms_per_class % self.groups_per_class != 0 {
            return bad("groups must split a class evenly");
        }
        let group = self.terms_per_class / self.groups_per_class;
        if self.terms_per_sentence < 2 || self.terms_per_sentence > group {
            return bad("terms per sentence must be between 2 and the group size");
        }
        if self.noise_len > 0 && self.noise_vocab == 0 {
            return bad("noise words need a noise vocabulary");
        }
        if self.distractor && (self.families < 2 || !self.group_words) {
            return bad("distractors need group words and at least two families");
        }
        Ok(())
    }
}

/// A generated corpus. `groups[f][c][g]` lists the terms of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub records: Vec<AnnotatedSentence>,
    /// The word that names each record's group, if any.
    pub indicators: Vec<Option<String>>,
    pub groups: Vec<Vec<Vec<Vec<String>>>>,
}

pub fn class_word(family: usize, class: usize) -> String {
    format!("class{family}x{class}")
}

pub fn group_word(family: usize, class: usize, group: usize) -> String {
    format!("group{family}x{class}x{group}")
}

/// Draws a planted corpus.
pub fn planted_corpus(cfg: &PlantedConfig) -> Result<PlantedCorpus> {
    cfg.validate()?;
    let mut rng = derive_rng(cfg.seed, "synth");
    let unique = cfg.classes_per_family * cfg.terms_per_class / cfg.memberships;
    let per_layer = unique / cfg.classes_per_family;
    let group_size = cfg.terms_per_class / cfg.groups_per_class;

    let mut groups = Vec::with_capacity(cfg.families);
    for f in 0..cfg.families {
        let names: Vec<String> = (0..unique).map(|i| format!("term{f}x{i}")).collect();
        // Terms are dealt into blocks; layer `m` gives block `k` to class
        // `k + m`, so no class holds a term twice.
        let mut perm: Vec<usize> = (0..unique).collect();
        perm.shuffle(&mut rng);
        let mut classes: Vec<Vec<usize>> = alloc::vec![Vec::new(); cfg.classes_per_family];
        for m in 0..cfg.memberships {
            for (k, block) in perm.chunks(per_layer).enumerate() {
                classes[(k + m) % cfg.classes_per_family].extend_from_slice(block);
            }
        }
        let mut fam: Vec<Vec<Vec<String>>> = Vec::with_capacity(cfg.classes_per_family);
        for mut members in classes {
            members.shuffle(&mut rng);
            fam.push(members.chunks(group_size).map(|g| g.iter().map(|&i| names[i].clone()).collect()).collect());
        }
        groups.push(fam);
    }

    let mut records = Vec::with_capacity(cfg.sentences);
    let mut indicators = Vec::with_capacity(cfg.sentences);
    let width = format!("{}", cfg.sentences - 1).len();
    for n in 0..cfg.sentences {
        let f = rng.gen_range(0..cfg.families);
        let c = rng.gen_range(0..cfg.classes_per_family);
        let g = rng.gen_range(0..cfg.groups_per_class);
        let members: &Vec<String> = &groups[f][c][g];
        let terms: Vec<String> =
            index::sample(&mut rng, members.len(), cfg.terms_per_sentence).into_iter().map(|i| members[i].clone()).collect();
        let mut context: Vec<String> = (0..cfg.noise_len).map(|_| format!("noise{}", rng.gen_range(0..cfg.noise_vocab))).collect();
        let mut planted = Vec::new();
        if cfg.class_words {
            planted.push(class_word(f, c));
        }
        let indicator = cfg.group_words.then(|| group_word(f, c, g));
        planted.extend(indicator.clone());
        if cfg.distractor {
            let other = (f + rng.gen_range(1..cfg.families)) % cfg.families;
            planted.push(group_word(
                other,
                rng.gen_range(0..cfg.classes_per_family),
                rng.gen_range(0..cfg.groups_per_class),
            ));
        }
        planted.push(PLACEHOLDER.into());
        for w in planted {
            let at = rng.gen_range(0..=context.len());
            context.insert(at, w);
        }
        records.push(AnnotatedSentence { id: format!("syn{n:0width$}"), context, terms, hypernym_span: None });
        indicators.push(indicator);
    }
    Ok(PlantedCorpus { records, indicators, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::{BTreeMap, BTreeSet};

    #[test]
    fn class_corpus_shape() {
        let cfg = PlantedConfig::class_indicators();
        let corpus = planted_corpus(&cfg).unwrap();
        assert_eq!(corpus.records.len(), 2000);
        let mut memberships: BTreeMap<&str, usize> = BTreeMap::new();
        for class in &corpus.groups[0] {
            let members: BTreeSet<&str> = class.iter().flatten().map(String::as_str).collect();
            assert_eq!(members.len(), 40);
            for m in members {
                *memberships.entry(m).or_default() += 1;
            }
        }
        assert_eq!(memberships.len(), 100);
        assert!(memberships.values().all(|&n| n == 2));
        for (rec, ind) in corpus.records.iter().zip(&corpus.indicators) {
            rec.validate().unwrap();
            assert_eq!(rec.terms.len(), 4);
            assert_eq!(rec.context.len(), 6 + 3);
            assert!(rec.context.contains(ind.as_ref().unwrap()));
        }
    }

    #[test]
    fn terms_come_from_the_named_group() {
        let corpus = planted_corpus(&PlantedConfig::subclass_indicators()).unwrap();
        for (rec, ind) in corpus.records.iter().zip(&corpus.indicators) {
            let parts: Vec<usize> = ind.as_ref().unwrap()["group".len()..].split('x').map(|p| p.parse().unwrap()).collect();
            let group = &corpus.groups[parts[0]][parts[1]][parts[2]];
            assert!(rec.terms.iter().all(|t| group.contains(t)));
            let others = rec.context.iter().filter(|w| w.starts_with("group")).count();
            assert_eq!(others, 2);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = PlantedConfig::cooccurrence();
        assert_eq!(planted_corpus(&cfg).unwrap(), planted_corpus(&cfg).unwrap());
        let other = planted_corpus(&PlantedConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(planted_corpus(&cfg).unwrap().records, other.records);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = PlantedConfig::class_indicators();
        assert!(planted_corpus(&PlantedConfig { memberships: 6, ..base }).is_err());
        assert!(planted_corpus(&PlantedConfig { terms_per_sentence: 9, ..base }).is_err());
        assert!(planted_corpus(&PlantedConfig { distractor: true, ..base }).is_err());
    }
}
