//! Lexical-substitution baselines: the IN/OUT mixture score (LS), its
//! seed co-occurrence variant (LSCo) and the trained context transform
//! (PIC).

mod pic;

pub use pic::{Pic, PicConfig, PicParams};

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{AnnotatedSentence, TermLexicon, Vocabulary, PLACEHOLDER};
use crate::embeddings::{DualEmbedding, Side};
use crate::eval::{evaluate_rankings, gold_labels, EvalSample, Ranker};
use crate::model::samples_from_sentence;
use crate::numerics::linalg::{axpy, dot, norm};
use crate::numerics::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Weight of the seed IN-IN term in LS.
    pub lambda1: f64,
    /// Weight of LS in LSCo.
    pub lambda2: f64,
    pub pic: PicConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { lambda1: 0.5, lambda2: 0.1, pic: PicConfig::default() }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        check_weight("lambda1", self.lambda1)?;
        check_weight("lambda2", self.lambda2)?;
        self.pic.validate()
    }
}

fn check_weight(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidConfig(alloc::format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// Default λ2 grid: 0.0 to 1.0 in steps of 0.1.
pub fn default_lambda2_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Candidate vectors for every label, precomputed from a [`DualEmbedding`].
///
/// Multi-word terms use the mean of their word vectors on both sides.
#[derive(Debug, Clone)]
pub struct LexicalScorer {
    emb: DualEmbedding,
    lexicon: TermLexicon,
    /// Unit-normalized candidate IN and OUT vectors; zero rows stay zero.
    in_unit: Tensor<f64>,
    out_unit: Tensor<f64>,
    out_raw: Tensor<f64>,
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        alloc::vec![0.0; v.len()]
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|x| f64::from(*x)).collect()
}

/// Descending by score, ties by label id, `skip` removed, cut to `depth`.
pub(crate) fn top_labels(scores: &[f64], skip: Option<usize>, depth: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|l| Some(*l) != skip).collect();
    let by_score = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if depth < order.len() {
        order.select_nth_unstable_by(depth, by_score);
        order.truncate(depth);
    }
    order.sort_by(by_score);
    order
}

impl LexicalScorer {
    pub fn new(emb: DualEmbedding, lexicon: TermLexicon) -> Result<Self> {
        if lexicon.is_empty() {
            return Err(Error::EmptyInput("label set"));
        }
        let d = emb.dim();
        let n = lexicon.len();
        let mut in_unit = Tensor::zeros(&[n, d]);
        let mut out_unit = Tensor::zeros(&[n, d]);
        let mut out_raw = Tensor::zeros(&[n, d]);
        for (l, term) in lexicon.terms().iter().enumerate() {
            let vi = widen(&emb.term_vector(term, Side::In)?);
            let vo = widen(&emb.term_vector(term, Side::Out)?);
            in_unit.row_mut(l).copy_from_slice(&unit(&vi));
            out_unit.row_mut(l).copy_from_slice(&unit(&vo));
            out_raw.row_mut(l).copy_from_slice(&vo);
        }
        Ok(LexicalScorer { emb, lexicon, in_unit, out_unit, out_raw })
    }

    pub fn embedding(&self) -> &DualEmbedding {
        &self.emb
    }

    pub fn lexicon(&self) -> &TermLexicon {
        &self.lexicon
    }

    pub fn dim(&self) -> usize {
        self.emb.dim()
    }

    pub(crate) fn out_raw(&self) -> &Tensor<f64> {
        &self.out_raw
    }

    pub(crate) fn seed_in(&self, seed: &str) -> Result<Vec<f64>> {
        Ok(widen(&self.emb.term_vector(seed, Side::In)?))
    }

    /// Word ids of the context words that count, in id order so sums do
    /// not depend on word order.
    pub(crate) fn context_ids<S: AsRef<str>>(&self, context: &[S]) -> Vec<usize> {
        let mut ids: Vec<usize> = context
            .iter()
            .map(AsRef::as_ref)
            .filter(|w| *w != PLACEHOLDER && *w != Vocabulary::PAD_TOKEN)
            .map(|w| self.emb.vocab().id(w))
            .filter(|&id| id != Vocabulary::PAD && id != Vocabulary::PLACEHOLDER)
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Mean over context words of `f(word IN vector)`; `None` when the
    /// context has no usable words.
    fn context_mean<S: AsRef<str>>(&self, context: &[S], normalize: bool) -> Option<Vec<f64>> {
        let ids = self.context_ids(context);
        if ids.is_empty() {
            return None;
        }
        let table = self.emb.table(Side::In);
        let mut acc = alloc::vec![0.0; self.dim()];
        for id in &ids {
            let v = widen(table.row(*id));
            let v = if normalize { unit(&v) } else { v };
            axpy(1.0, &v, &mut acc);
        }
        let inv = 1.0 / ids.len() as f64;
        acc.iter_mut().for_each(|x| *x *= inv);
        Some(acc)
    }

    /// Mean raw context IN vector, zero when there are no context words.
    pub(crate) fn context_in_mean<S: AsRef<str>>(&self, context: &[S]) -> Vec<f64> {
        self.context_mean(context, false).unwrap_or_else(|| alloc::vec![0.0; self.dim()])
    }

    /// `cos(s^I, t^I)` for every label.
    pub fn seed_similarity(&self, seed: &str) -> Result<Vec<f64>> {
        let s = unit(&self.seed_in(seed)?);
        Ok((0..self.lexicon.len()).map(|l| dot(&s, self.in_unit.row(l))).collect())
    }

    /// `cos(s^I, t^O)` for every label.
    pub fn cooccurrence(&self, seed: &str) -> Result<Vec<f64>> {
        let s = unit(&self.seed_in(seed)?);
        Ok((0..self.lexicon.len()).map(|l| dot(&s, self.out_unit.row(l))).collect())
    }

    /// LS score of every label.
    pub fn ls_scores<S: AsRef<str>>(&self, seed: &str, context: &[S], lambda1: f64) -> Result<Vec<f64>> {
        check_weight("lambda1", lambda1)?;
        let mut scores = self.seed_similarity(seed)?;
        scores.iter_mut().for_each(|v| *v *= lambda1);
        if let Some(c) = self.context_mean(context, true) {
            for (l, v) in scores.iter_mut().enumerate() {
                *v += (1.0 - lambda1) * dot(&c, self.out_unit.row(l));
            }
        }
        Ok(scores)
    }

    /// LSCo score of every label.
    pub fn lsco_scores<S: AsRef<str>>(&self, seed: &str, context: &[S], lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
        check_weight("lambda2", lambda2)?;
        let ls = self.ls_scores(seed, context, lambda1)?;
        let co = self.cooccurrence(seed)?;
        Ok(mix(&ls, &co, lambda2))
    }

    fn label_of(&self, candidate: &str) -> Result<usize> {
        self.lexicon
            .label(candidate)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("`{candidate}` is not in the label set")))
    }

    /// LS score of one candidate term.
    pub fn ls_score<S: AsRef<str>>(&self, seed: &str, context: &[S], candidate: &str, lambda1: f64) -> Result<f64> {
        let l = self.label_of(candidate)?;
        Ok(self.ls_scores(seed, context, lambda1)?[l])
    }

    /// LSCo score of one candidate term.
    pub fn lsco_score<S: AsRef<str>>(
        &self,
        seed: &str,
        context: &[S],
        candidate: &str,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<f64> {
        let l = self.label_of(candidate)?;
        Ok(self.lsco_scores(seed, context, lambda1, lambda2)?[l])
    }
}

fn mix(ls: &[f64], co: &[f64], lambda2: f64) -> Vec<f64> {
    ls.iter().zip(co).map(|(a, b)| lambda2 * a + (1.0 - lambda2) * b).collect()
}

/// LS (with `lambda2 = 1`) or LSCo as a [`Ranker`].
#[derive(Debug, Clone, Copy)]
pub struct LexicalBaseline<'a> {
    pub scorer: &'a LexicalScorer,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl<'a> LexicalBaseline<'a> {
    pub fn ls(scorer: &'a LexicalScorer, lambda1: f64) -> Self {
        LexicalBaseline { scorer, lambda1, lambda2: 1.0 }
    }

    pub fn lsco(scorer: &'a LexicalScorer, lambda1: f64, lambda2: f64) -> Self {
        LexicalBaseline { scorer, lambda1, lambda2 }
    }
}

impl Ranker for LexicalBaseline<'_> {
    fn rank(&self, seed: &str, context: &[String], depth: usize) -> Result<Vec<usize>> {
        let scores = if self.lambda2 == 1.0 {
            self.scorer.ls_scores(seed, context, self.lambda1)?
        } else {
            self.scorer.lsco_scores(seed, context, self.lambda1, self.lambda2)?
        };
        Ok(top_labels(&scores, self.scorer.lexicon.label(seed), depth))
    }
}

/// Recall@`cutoff` of LSCo at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda2Sweep {
    /// Best grid point; ties go to the larger λ2.
    pub best: f64,
    pub best_recall: f64,
    /// `(λ2, recall)` in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Evaluates LSCo at each λ2 in `grid` on `test`.
pub fn sweep_lambda2(
    scorer: &LexicalScorer,
    lambda1: f64,
    grid: &[f64],
    test: &[AnnotatedSentence],
    cutoff: usize,
) -> Result<Lambda2Sweep> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("lambda2 grid"));
    }
    for &g in grid {
        check_weight("lambda2", g)?;
    }
    check_weight("lambda1", lambda1)?;
    struct Pre {
        id: String,
        seed: String,
        gold: Vec<usize>,
        skip: Option<usize>,
        ls: Vec<f64>,
        co: Vec<f64>,
    }
    let mut pre = Vec::new();
    for rec in test.iter().filter(|r| r.terms.len() >= 2) {
        for s in samples_from_sentence(rec)? {
            pre.push(Pre {
                id: rec.id.clone(),
                seed: s.seed.into(),
                gold: gold_labels(rec, s.seed, &scorer.lexicon),
                skip: scorer.lexicon.label(s.seed),
                ls: scorer.ls_scores(s.seed, &rec.context, lambda1)?,
                co: scorer.cooccurrence(s.seed)?,
            });
        }
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &g in grid {
        let samples: Vec<EvalSample> = pre
            .iter()
            .map(|p| {
                let scores = if g == 1.0 { p.ls.clone() } else { mix(&p.ls, &p.co, g) };
                EvalSample {
                    id: p.id.clone(),
                    seed: p.seed.clone(),
                    gold: p.gold.clone(),
                    ranking: top_labels(&scores, p.skip, cutoff),
                }
            })
            .collect();
        let report = evaluate_rankings(&samples, &[cutoff])?;
        curve.push((g, report.means[0].recall));
    }
    let (best, best_recall) = curve
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .expect("grid is not empty");
    Ok(Lambda2Sweep { best, best_recall, curve })
}
