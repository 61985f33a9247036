use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::CaseModel;
use crate::corpus::{strip_hypernym, AnnotatedSentence};
use crate::numerics::{adam_step, AdamConfig, CandidateSampler, CandidateSet, SamplerConfig, Scalar};
use crate::{derive_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    /// Negative sampling; `num_sampled` is the number of negatives per batch.
    pub sampler: SamplerConfig,
    /// Score every label instead of sampling negatives.
    pub full_softmax: bool,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Train on contexts with the hypernym and pattern words removed.
    pub strip_hypernyms: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            epochs: 10,
            sampler: SamplerConfig::default(),
            full_softmax: false,
            adam: AdamConfig::default(),
            seed: 0,
            strip_hypernyms: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || (!self.full_softmax && self.sampler.num_sampled == 0) {
            return Err(Error::InvalidConfig("batch size, epochs and negatives must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean batch loss.
    pub mean_loss: f64,
    pub samples: usize,
}

impl<F: Scalar> CaseModel<F> {
    /// Trains on `records`, calling `on_epoch` after every epoch.
    ///
    /// Samples are reshuffled every epoch; each batch shares one set of
    /// sampled negatives. When the label set is too small for the requested
    /// negatives the batch falls back to the full softmax.
    pub fn train<C>(&mut self, records: &[AnnotatedSentence], cfg: &TrainConfig, mut on_epoch: C) -> Result<Vec<EpochStats>>
    where
        C: FnMut(&EpochStats, &Self) -> Result<()>,
    {
        cfg.validate()?;
        let stripped: Vec<AnnotatedSentence>;
        let records = if cfg.strip_hypernyms {
            stripped = records.iter().map(|r| strip_hypernym(r).0).collect();
            &stripped[..]
        } else {
            records
        };
        let data = self.prepare(records)?;
        if data.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let num_labels = self.lexicon.len();
        let sampler = CandidateSampler::new(num_labels, cfg.sampler.distribution)?;
        let full = CandidateSet::full(num_labels);
        let mut shuffle_rng = derive_rng(cfg.seed, "shuffle");
        let mut sample_rng = derive_rng(cfg.seed, "negatives");
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut history = Vec::with_capacity(cfg.epochs);
        let mut batch = Vec::with_capacity(cfg.batch_size);

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut shuffle_rng);
            let mut loss_sum = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| data[i].clone()));
                let mut union: Vec<usize> = Vec::new();
                let mut seen = alloc::collections::BTreeSet::new();
                for (_, ts) in &batch {
                    for t in ts {
                        if seen.insert(*t) {
                            union.push(*t);
                        }
                    }
                }
                let sampled;
                let candidates = if cfg.full_softmax || cfg.sampler.num_sampled >= num_labels - union.len() {
                    &full
                } else {
                    let s = sampler.sample(&union, &cfg.sampler, &mut sample_rng)?;
                    sampled = CandidateSet::from_sample(&union, &s, &sampler)?;
                    &sampled
                };
                self.params.zero_grads();
                let loss = self.accumulate_batch(&batch, candidates)?.to_f64_lossy();
                if !loss.is_finite() {
                    return Err(Error::Divergence(alloc::format!("loss became {loss} in epoch {epoch}")));
                }
                adam_step(&mut self.params, &cfg.adam)?;
                loss_sum += loss * batch.len() as f64;
            }
            let stats = EpochStats { epoch, mean_loss: loss_sum / data.len() as f64, samples: data.len() };
            history.push(stats);
            on_epoch(&stats, self)?;
        }
        Ok(history)
    }
}
