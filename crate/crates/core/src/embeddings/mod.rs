//! CBOW word vectors with negative sampling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use num_traits::Float;
use rand::Rng;

use crate::corpus::Vocabulary;
use crate::numerics::linalg::{axpy, cosine, dot, norm};
use crate::numerics::{sigmoid, Tensor};
use crate::{derive_rng, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CbowConfig {
    pub dim: usize,
    /// Maximum distance between the target and a context word.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    pub learning_rate: f64,
    /// Words seen fewer times share the OOV vector.
    pub min_count: usize,
    pub seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            subsample: 1e-4,
            learning_rate: 0.05,
            min_count: 1,
            seed: 0,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 || self.min_count == 0 {
            return Err(Error::InvalidConfig("cbow counts must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.subsample >= 0.0) {
            return Err(Error::InvalidConfig("cbow learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Which table of a [`DualEmbedding`] to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Context-side vectors.
    In,
    /// Target-side vectors.
    Out,
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" | "IN" => Ok(Side::In),
            "out" | "OUT" => Ok(Side::Out),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown embedding side {s:?}"))),
        }
    }
}

/// IN and OUT tables over one vocabulary; row `i` belongs to word id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEmbedding {
    vocab: Vocabulary,
    input: Tensor<f32>,
    output: Tensor<f32>,
}

impl DualEmbedding {
    pub fn new(vocab: Vocabulary, input: Tensor<f32>, output: Tensor<f32>) -> Result<Self> {
        if input.shape().len() != 2 || input.cols() == 0 {
            return Err(Error::InvalidArgument("embedding tables must be non-empty matrices".into()));
        }
        input.ensure_shape(&[vocab.len(), input.cols()])?;
        output.ensure_shape(input.shape())?;
        if !input.is_finite() || !output.is_finite() {
            return Err(Error::InvalidArgument("embedding contains non-finite values".into()));
        }
        Ok(DualEmbedding { vocab, input, output })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn table(&self, side: Side) -> &Tensor<f32> {
        match side {
            Side::In => &self.input,
            Side::Out => &self.output,
        }
    }

    /// Vector of a single word; unknown words get the OOV row.
    pub fn word_vector(&self, word: &str, side: Side) -> &[f32] {
        self.table(side).row(self.vocab.id(word))
    }

    /// Mean of the vectors of an underscore-joined term's words.
    pub fn term_vector(&self, term: &str, side: Side) -> Result<Vec<f32>> {
        let mut words = term.split('_').filter(|w| !w.is_empty()).peekable();
        if words.peek().is_none() {
            return Err(Error::EmptyInput("term"));
        }
        let mut out = vec![0.0f32; self.dim()];
        let mut n = 0usize;
        for w in words {
            axpy(1.0, self.word_vector(w, side), &mut out);
            n += 1;
        }
        if n > 1 {
            let inv = 1.0 / n as f32;
            out.iter_mut().for_each(|v| *v *= inv);
        }
        Ok(out)
    }

    /// Exact top-`k` word ids by cosine against `query`, ties broken by id.
    pub fn nearest(&self, query: &[f32], side: Side, k: usize) -> Result<Vec<(usize, f32)>> {
        let table = self.table(side);
        if query.len() != self.dim() {
            return Err(Error::ShapeMismatch { expected: vec![self.dim()], actual: vec![query.len()] });
        }
        if norm(query) == 0.0 {
            return Err(Error::InvalidArgument("zero-norm query".into()));
        }
        if k > table.rows() {
            return Err(Error::InvalidArgument(alloc::format!("k = {k} exceeds vocabulary size {}", table.rows())));
        }
        let mut scored: Vec<(usize, f32)> = (0..table.rows()).map(|i| (i, cosine(query, table.row(i)))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}

/// Per-epoch mean negative-sampling loss of a CBOW run.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowReport {
    pub epoch_losses: Vec<f64>,
}

/// Trains CBOW with negative sampling on tokenised sentences.
///
/// Single-threaded and deterministic for a fixed seed.
pub fn train_cbow<S: AsRef<str>>(sentences: &[Vec<S>], cfg: &CbowConfig) -> Result<(DualEmbedding, CbowReport)> {
    cfg.validate()?;
    let vocab = Vocabulary::from_counts(sentences.iter().flatten().map(AsRef::as_ref), cfg.min_count);
    let encoded: Vec<Vec<usize>> = sentences.iter().map(|s| vocab.encode(s)).collect();
    let mut counts = vec![0u64; vocab.len()];
    for id in encoded.iter().flatten() {
        counts[*id] += 1;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }

    let d = cfg.dim;
    let mut rng = derive_rng(cfg.seed, "cbow");
    let mut input = Tensor::<f32>::zeros(&[vocab.len(), d]);
    let half = 0.5 / d as f32;
    input.as_mut_slice().iter_mut().for_each(|v| *v = rng.gen_range(-half..half));
    let mut output = Tensor::<f32>::zeros(&[vocab.len(), d]);

    let noise = NoiseTable::new(&counts);
    let keep_prob: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if cfg.subsample <= 0.0 || c == 0 {
                return 1.0;
            }
            let t = cfg.subsample * total as f64;
            ((Float::sqrt(c as f64 / t) + 1.0) * t / c as f64).min(1.0)
        })
        .collect();

    let schedule = (cfg.epochs as u64 * total) as f64 + 1.0;
    let mut processed = 0u64;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut hidden = vec![0.0f32; d];
    let mut grad = vec![0.0f32; d];
    let mut kept = Vec::new();
    let mut ctx = Vec::new();

    for _ in 0..cfg.epochs {
        let (mut loss_sum, mut loss_n) = (0.0f64, 0u64);
        for sent in &encoded {
            kept.clear();
            kept.extend(sent.iter().copied().filter(|&w| keep_prob[w] >= 1.0 || rng.gen::<f64>() < keep_prob[w]));
            processed += sent.len() as u64;
            let lr = (cfg.learning_rate * (1.0 - processed as f64 / schedule).max(1e-4)) as f32;
            for j in 0..kept.len() {
                let radius = rng.gen_range(1..=cfg.window);
                ctx.clear();
                ctx.extend((j.saturating_sub(radius)..(j + radius + 1).min(kept.len())).filter(|&i| i != j).map(|i| kept[i]));
                if ctx.is_empty() {
                    continue;
                }
                hidden.iter_mut().for_each(|v| *v = 0.0);
                for &c in &ctx {
                    axpy(1.0, input.row(c), &mut hidden);
                }
                let inv = 1.0 / ctx.len() as f32;
                hidden.iter_mut().for_each(|v| *v *= inv);
                grad.iter_mut().for_each(|v| *v = 0.0);

                let target = kept[j];
                for k in 0..=cfg.negatives {
                    let (word, label) = if k == 0 {
                        (target, 1.0f32)
                    } else {
                        let w = noise.draw(&mut rng);
                        if w == target {
                            continue;
                        }
                        (w, 0.0)
                    };
                    let score = dot(&hidden, output.row(word));
                    let p = sigmoid(score);
                    let l = if label > 0.0 { -ln_sigmoid(score) } else { -ln_sigmoid(-score) };
                    loss_sum += f64::from(l);
                    loss_n += 1;
                    let g = (label - p) * lr;
                    axpy(g, output.row(word), &mut grad);
                    axpy(g, &hidden, output.row_mut(word));
                }
                for &c in &ctx {
                    axpy(1.0, &grad, input.row_mut(c));
                }
            }
        }
        epoch_losses.push(if loss_n == 0 { 0.0 } else { loss_sum / loss_n as f64 });
    }
    if !input.is_finite() || !output.is_finite() {
        return Err(Error::Divergence("cbow produced non-finite vectors".into()));
    }
    Ok((DualEmbedding::new(vocab, input, output)?, CbowReport { epoch_losses }))
}

fn ln_sigmoid(x: f32) -> f32 {
    // ln σ(x) = -ln(1 + e^{-x}), computed without overflow
    if x >= 0.0 {
        -Float::ln_1p(Float::exp(-x))
    } else {
        x - Float::ln_1p(Float::exp(x))
    }
}

/// Unigram^0.75 sampler over word ids.
struct NoiseTable {
    cumulative: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += Float::powf(c as f64, 0.75);
                acc
            })
            .collect();
        NoiseTable { cumulative }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Pretraining sentences: every record's context with its terms put back.
pub fn pretraining_sentences(records: &[crate::corpus::AnnotatedSentence]) -> Vec<Vec<String>> {
    records.iter().map(|r| r.reinserted()).collect()
}
