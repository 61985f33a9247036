use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{top_labels, LexicalScorer};
use crate::corpus::AnnotatedSentence;
use crate::eval::Ranker;
use crate::model::{samples_from_sentence, EpochStats};
use crate::numerics::linalg::{dot, gemv, outer_acc, axpy};
use crate::numerics::{
    adam_step, sampled_softmax_loss, AdamConfig, CandidateSampler, CandidateSet, ParamStore, SamplerConfig, Tensor,
};
use crate::{derive_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub sampler: SamplerConfig,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for PicConfig {
    fn default() -> Self {
        PicConfig { epochs: 5, batch_size: 128, sampler: SamplerConfig::default(), adam: AdamConfig::default(), seed: 0 }
    }
}

impl PicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.sampler.num_sampled == 0 {
            return Err(Error::InvalidConfig("PIC epochs, batch size and negatives must be positive".into()));
        }
        Ok(())
    }
}

/// Context transform `W c + b` applied to context IN vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PicParams {
    /// `d x d`.
    pub w: Tensor<f64>,
    pub bias: Vec<f64>,
    pub trained: bool,
}

impl PicParams {
    /// Zero transform, not yet trained.
    pub fn zeros(dim: usize) -> Self {
        PicParams { w: Tensor::zeros(&[dim, dim]), bias: alloc::vec![0.0; dim], trained: false }
    }

    /// A given transform, usable for scoring.
    pub fn fixed(w: Tensor<f64>, bias: Vec<f64>) -> Result<Self> {
        let d = bias.len();
        w.ensure_shape(&[d, d])?;
        Ok(PicParams { w, bias, trained: true })
    }

    fn apply(&self, c: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        let mut wc = alloc::vec![0.0; self.bias.len()];
        gemv(self.w.as_slice(), c.len(), c, &mut wc);
        axpy(1.0, &wc, &mut out);
        out
    }
}

/// `cos(s^I, t^I) + t^O · (W mean(c^I) + b)` with embeddings frozen.
#[derive(Debug, Clone)]
pub struct Pic<'a> {
    scorer: &'a LexicalScorer,
    params: PicParams,
}

type Example = (Vec<f64>, Vec<usize>);

impl<'a> Pic<'a> {
    pub fn new(scorer: &'a LexicalScorer) -> Self {
        Pic { scorer, params: PicParams::zeros(scorer.dim()) }
    }

    pub fn with_params(scorer: &'a LexicalScorer, params: PicParams) -> Result<Self> {
        let d = scorer.dim();
        params.w.ensure_shape(&[d, d])?;
        if params.bias.len() != d {
            return Err(Error::ShapeMismatch { expected: alloc::vec![d], actual: alloc::vec![params.bias.len()] });
        }
        Ok(Pic { scorer, params })
    }

    pub fn params(&self) -> &PicParams {
        &self.params
    }

    /// Score of every label.
    pub fn scores<S: AsRef<str>>(&self, seed: &str, context: &[S]) -> Result<Vec<f64>> {
        if !self.params.trained {
            return Err(Error::NotTrained);
        }
        let mut scores = self.scorer.seed_similarity(seed)?;
        let x = self.params.apply(&self.scorer.context_in_mean(context));
        let out = self.scorer.out_raw();
        for (l, v) in scores.iter_mut().enumerate() {
            *v += dot(out.row(l), &x);
        }
        Ok(scores)
    }

    pub fn score<S: AsRef<str>>(&self, seed: &str, context: &[S], candidate: &str) -> Result<f64> {
        let l = self.scorer.label_of(candidate)?;
        Ok(self.scores(seed, context)?[l])
    }

    fn examples(&self, records: &[AnnotatedSentence]) -> Result<Vec<Example>> {
        let lex = self.scorer.lexicon();
        let mut out = Vec::new();
        for rec in records.iter().filter(|r| r.terms.len() >= 2) {
            let c = self.scorer.context_in_mean(&rec.context);
            for s in samples_from_sentence(rec)? {
                let targets: Vec<usize> = s.targets.iter().filter_map(|t| lex.label(t)).collect();
                if !targets.is_empty() {
                    out.push((c.clone(), targets));
                }
            }
        }
        Ok(out)
    }

    /// Trains the transform by sampled softmax over the context term
    /// `t^O · (W c + b)`, calling `on_epoch` after every epoch.
    pub fn train<C>(&mut self, records: &[AnnotatedSentence], cfg: &PicConfig, mut on_epoch: C) -> Result<Vec<EpochStats>>
    where
        C: FnMut(&EpochStats) -> Result<()>,
    {
        cfg.validate()?;
        let data = self.examples(records)?;
        if data.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let d = self.scorer.dim();
        let n = self.scorer.lexicon().len();
        let mut store = ParamStore::new();
        let w_id = store.add("pic.W", self.params.w.clone())?;
        let b_id = store.add("pic.b", Tensor::from_vec(&[d], self.params.bias.clone())?)?;
        let sampler = CandidateSampler::new(n, cfg.sampler.distribution)?;
        let full = CandidateSet::full(n);
        let mut shuffle_rng = derive_rng(cfg.seed, "pic.shuffle");
        let mut sample_rng = derive_rng(cfg.seed, "pic.negatives");
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut shuffle_rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<&Example> = chunk.iter().map(|&i| &data[i]).collect();
                let mut union = Vec::new();
                let mut seen = alloc::collections::BTreeSet::new();
                for (_, ts) in &batch {
                    union.extend(ts.iter().copied().filter(|t| seen.insert(*t)));
                }
                let sampled;
                let candidates = if cfg.sampler.num_sampled >= n - union.len() {
                    &full
                } else {
                    let s = sampler.sample(&union, &cfg.sampler, &mut sample_rng)?;
                    sampled = CandidateSet::from_sample(&union, &s, &sampler)?;
                    &sampled
                };
                store.zero_grads();
                let loss = batch_loss(&mut store, self.scorer.out_raw(), &batch, candidates)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence(alloc::format!("PIC loss became {loss} in epoch {epoch}")));
                }
                adam_step(&mut store, &cfg.adam)?;
                loss_sum += loss * batch.len() as f64;
            }
            let stats = EpochStats { epoch, mean_loss: loss_sum / data.len() as f64, samples: data.len() };
            history.push(stats);
            on_epoch(&stats)?;
        }
        self.params = PicParams {
            w: store.value(w_id).clone(),
            bias: store.value(b_id).as_slice().to_vec(),
            trained: true,
        };
        Ok(history)
    }
}

/// Mean sampled-softmax loss of a batch; accumulates gradients for
/// `pic.W` and `pic.b` into `store`.
fn batch_loss(store: &mut ParamStore<f64>, out: &Tensor<f64>, batch: &[&Example], candidates: &CandidateSet<f64>) -> Result<f64> {
    let w_id = store.id("pic.W")?;
    let b_id = store.id("pic.b")?;
    let d = store.value(b_id).len();
    let params = PicParams::fixed(store.value(w_id).clone(), store.value(b_id).as_slice().to_vec())?;
    let mut inputs = Tensor::zeros(&[batch.len(), d]);
    for (i, (c, _)) in batch.iter().enumerate() {
        inputs.row_mut(i).copy_from_slice(&params.apply(c));
    }
    let targets: Vec<Vec<usize>> = batch.iter().map(|(_, t)| t.clone()).collect();
    let zero_bias = Tensor::zeros(&[out.rows()]);
    let res = sampled_softmax_loss(&inputs, out, &zero_bias, &targets, candidates)?;
    let (_, mut grads) = store.split();
    for (i, (c, _)) in batch.iter().enumerate() {
        let dx = res.d_inputs.row(i);
        outer_acc(grads[w_id].as_mut_slice(), dx, c);
        axpy(1.0, dx, grads[b_id].as_mut_slice());
    }
    Ok(res.loss)
}

impl Ranker for Pic<'_> {
    fn rank(&self, seed: &str, context: &[String], depth: usize) -> Result<Vec<usize>> {
        let scores = self.scores(seed, context)?;
        Ok(top_labels(&scores, self.scorer.lexicon().label(seed), depth))
    }
}

#[cfg(test)]
pub(super) fn loss_for_check(store: &mut ParamStore<f64>, out: &Tensor<f64>, batch: &[(Vec<f64>, Vec<usize>)]) -> Result<f64> {
    let refs: Vec<&Example> = batch.iter().collect();
    batch_loss(store, out, &refs, &CandidateSet::full(out.rows()))
}
