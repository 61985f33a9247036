//! Ranking metrics and macro-averaged evaluation over (sentence, seed)
//! samples.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::corpus::{AnnotatedSentence, TermLexicon};
use crate::model::{samples_from_sentence, CaseModel};
use crate::numerics::Scalar;
use crate::{Error, Result};

pub const DEFAULT_CUTOFFS: [usize; 3] = [5, 10, 20];

/// Metric values at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub recall: f64,
    pub ap: f64,
    pub rr: f64,
    pub ndcg: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 4] = ["recall", "map", "mrr", "ndcg"];

    pub fn values(&self) -> [f64; 4] {
        [self.recall, self.ap, self.rr, self.ndcg]
    }
}

/// Recall, truncated average precision, reciprocal rank and binary nDCG of
/// the top `k` of `ranking` against `gold`.
pub fn metrics_at_k(ranking: &[usize], gold: &[usize], k: usize) -> Result<Metrics> {
    if ranking.is_empty() {
        return Err(Error::EmptyInput("ranking"));
    }
    if gold.is_empty() {
        return Err(Error::EmptyInput("ground truth"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    let mut rr = 0.0;
    let mut dcg = 0.0;
    for (i, label) in ranking.iter().take(k).enumerate() {
        if gold.contains(label) {
            hits += 1;
            let rank = (i + 1) as f64;
            precision_sum += hits as f64 / rank;
            if rr == 0.0 {
                rr = 1.0 / rank;
            }
            dcg += 1.0 / Float::log2(rank + 1.0);
        }
    }
    let ideal = gold.len().min(k);
    let idcg: f64 = (1..=ideal).map(|i| 1.0 / Float::log2(i as f64 + 1.0)).sum();
    Ok(Metrics {
        recall: hits as f64 / gold.len() as f64,
        ap: precision_sum / ideal as f64,
        rr,
        ndcg: dcg / idcg,
    })
}

/// One system ranking to be scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSample {
    pub id: String,
    pub seed: String,
    /// Ground-truth labels; terms outside the label set get ids `>= |L|`
    /// so they count as misses.
    pub gold: Vec<usize>,
    pub ranking: Vec<usize>,
}

/// Metrics of one sample at every cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMetrics {
    pub id: String,
    pub seed: String,
    pub at: Vec<Metrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cutoffs: Vec<usize>,
    /// Macro-averages, one per cutoff.
    pub means: Vec<Metrics>,
    /// Per-sample values in canonical `(id, seed)` order.
    pub samples: Vec<SampleMetrics>,
}

impl EvalReport {
    pub fn count(&self) -> usize {
        self.samples.len()
    }

    /// Macro-average at cutoff `k`, if it was computed.
    pub fn at(&self, k: usize) -> Option<&Metrics> {
        self.cutoffs.iter().position(|c| *c == k).map(|i| &self.means[i])
    }

    /// Per-sample values of one metric (`0..4` in [`Metrics::NAMES`] order)
    /// at cutoff `k`, aligned across reports over the same test set.
    pub fn per_sample(&self, k: usize, metric: usize) -> Option<Vec<f64>> {
        let i = self.cutoffs.iter().position(|c| *c == k)?;
        Some(self.samples.iter().map(|s| s.at[i].values()[metric]).collect())
    }
}

/// Scores every sample and macro-averages. Samples are put in `(id, seed)`
/// order first, so the report does not depend on input order.
pub fn evaluate_rankings(samples: &[EvalSample], cutoffs: &[usize]) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    if cutoffs.is_empty() {
        return Err(Error::EmptyInput("cutoffs"));
    }
    let mut order: Vec<&EvalSample> = samples.iter().collect();
    order.sort_by(|a, b| (&a.id, &a.seed).cmp(&(&b.id, &b.seed)));
    let mut out = Vec::with_capacity(order.len());
    for s in order {
        let at = cutoffs.iter().map(|&k| metrics_at_k(&s.ranking, &s.gold, k)).collect::<Result<Vec<_>>>()?;
        out.push(SampleMetrics { id: s.id.clone(), seed: s.seed.clone(), at });
    }
    let n = out.len() as f64;
    let means = (0..cutoffs.len())
        .map(|i| {
            let mut m = Metrics::default();
            for s in &out {
                m.recall += s.at[i].recall;
                m.ap += s.at[i].ap;
                m.rr += s.at[i].rr;
                m.ndcg += s.at[i].ndcg;
            }
            Metrics { recall: m.recall / n, ap: m.ap / n, rr: m.rr / n, ndcg: m.ndcg / n }
        })
        .collect();
    Ok(EvalReport { cutoffs: cutoffs.to_vec(), means, samples: out })
}

/// A system that ranks labels for a seed in a context. Rankings exclude
/// the seed's own label and need only be as long as the largest cutoff.
pub trait Ranker {
    fn rank(&self, seed: &str, context: &[String], depth: usize) -> Result<Vec<usize>>;
}

impl<F: Scalar> Ranker for CaseModel<F> {
    fn rank(&self, seed: &str, context: &[String], depth: usize) -> Result<Vec<usize>> {
        let e = self.encode(seed, context)?;
        Ok(CaseModel::rank(self, seed, &e)?.into_iter().take(depth).map(|(l, _)| l).collect())
    }
}

/// Ground-truth ids of `T∖{seed}`.
pub fn gold_labels(record: &AnnotatedSentence, seed: &str, lexicon: &TermLexicon) -> Vec<usize> {
    let mut unseen = lexicon.len();
    record
        .terms
        .iter()
        .filter(|t| *t != seed)
        .map(|t| {
            lexicon.label(t).unwrap_or_else(|| {
                unseen += 1;
                unseen - 1
            })
        })
        .collect()
}

/// Ranks every (sentence, seed) pair of `test` and scores the rankings.
pub fn evaluate<R: Ranker + ?Sized>(
    system: &R,
    test: &[AnnotatedSentence],
    lexicon: &TermLexicon,
    cutoffs: &[usize],
) -> Result<EvalReport> {
    let depth = cutoffs.iter().copied().max().unwrap_or(0);
    let mut samples = Vec::new();
    for rec in test {
        if rec.terms.len() < 2 {
            continue;
        }
        for s in samples_from_sentence(rec)? {
            samples.push(EvalSample {
                id: rec.id.clone(),
                seed: s.seed.into(),
                gold: gold_labels(rec, s.seed, lexicon),
                ranking: system.rank(s.seed, &rec.context, depth)?,
            });
        }
    }
    evaluate_rankings(&samples, cutoffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn recall_and_rr() {
        // G = {a, b, c} = {100, 101, 102}; a at rank 1, b at rank 5
        let ranking = [100, 1, 2, 3, 101, 4, 5, 6, 7, 8];
        let m = metrics_at_k(&ranking, &[100, 101, 102], 10).unwrap();
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.rr, 1.0);
    }

    #[test]
    fn perfect_ranking() {
        let m = metrics_at_k(&[3, 1, 2, 9], &[1, 2, 3], 5).unwrap();
        assert_eq!(m, Metrics { recall: 1.0, ap: 1.0, rr: 1.0, ndcg: 1.0 });
    }

    #[test]
    fn ndcg_and_ap_hand_values() {
        // G = {a, b}, hits at ranks 1 and 4, k = 5
        let m = metrics_at_k(&[10, 0, 1, 11, 2], &[10, 11], 5).unwrap();
        let want = (1.0 + 1.0 / 5f64.log2()) / (1.0 + 1.0 / 3f64.log2());
        assert!((m.ndcg - want).abs() < 1e-12);
        assert!((m.ndcg - 0.8772).abs() < 1e-4);
        assert!((m.ap - 0.75).abs() < 1e-12);
        assert!((m.rr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(metrics_at_k(&[], &[1], 5).is_err());
        assert!(metrics_at_k(&[1], &[], 5).is_err());
        assert!(metrics_at_k(&[1], &[1], 0).is_err());
        assert!(evaluate_rankings(&[], &[10]).is_err());
    }

    fn sample(id: &str, ranking: Vec<usize>, gold: Vec<usize>) -> EvalSample {
        EvalSample { id: id.into(), seed: "s".into(), gold, ranking }
    }

    #[test]
    fn macro_average() {
        let one = evaluate_rankings(&[sample("a", vec![1, 2], vec![1])], &[5]).unwrap();
        assert_eq!(one.means[0], one.samples[0].at[0]);
        let two = evaluate_rankings(&[sample("a", vec![1, 2], vec![1]), sample("b", vec![3, 2], vec![1])], &[5]).unwrap();
        assert_eq!(two.at(5).unwrap().recall, 0.5);
        assert_eq!(two.per_sample(5, 0).unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn order_does_not_matter() {
        let xs: Vec<EvalSample> = (0..20)
            .map(|i| sample(&alloc::format!("r{i}"), (0..10).map(|j| (i * 7 + j * 3) % 13).collect(), vec![i % 13, 5]))
            .collect();
        let mut rev = xs.clone();
        rev.reverse();
        assert_eq!(evaluate_rankings(&xs, &DEFAULT_CUTOFFS).unwrap(), evaluate_rankings(&rev, &DEFAULT_CUTOFFS).unwrap());
    }

    #[test]
    fn unseen_gold_terms_are_misses() {
        let lex = TermLexicon::from_ranked(vec![("a".into(), 2), ("b".into(), 1)]).unwrap();
        let rec = AnnotatedSentence {
            id: "x".into(),
            context: vec!["PLACEHOLDER".into()],
            terms: vec!["a".into(), "b".into(), "zz".into(), "yy".into()],
            hypernym_span: None,
        };
        assert_eq!(gold_labels(&rec, "a", &lex), [1, 2, 3]);
    }
}
