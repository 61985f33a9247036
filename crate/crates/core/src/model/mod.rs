//! The expansion network: seed NBoW + context encoder (+ attention) feeding
//! a softmax layer over the label set.

mod samples;
mod train;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{AnnotatedSentence, TermLexicon, Vocabulary};
use crate::embeddings::{DualEmbedding, Side};
use crate::encoders::{
    uniform, validate_combo, Attention, AttentionCache, AttentionKind, ContextEncoder, EncoderCache, EncoderKind,
    HyperParams,
};
use crate::numerics::linalg::{axpy, dot};
use crate::numerics::{
    sampled_softmax_loss, softmax, CandidateSet, Grads, ParamId, ParamStore, Scalar, Tensor, Values,
};
use crate::{derive_rng, Error, Result};

pub use samples::{find_placeholder, samples_from_sentence, trim_window, Sample};
pub use train::{EpochStats, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub encoder: EncoderKind,
    pub attention: AttentionKind,
    pub hp: HyperParams,
    /// Context words seen fewer times in training share the OOV vector.
    pub min_freq: usize,
    /// Half-width of the uniform initialisation of embeddings and head.
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderKind::Nbow,
            attention: AttentionKind::None,
            hp: HyperParams::default(),
            min_freq: 5,
            init_scale: 0.05,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        validate_combo(self.encoder, self.attention)?;
        self.hp.validate()?;
        if !(self.init_scale > 0.0) || self.min_freq == 0 {
            return Err(Error::InvalidConfig("init scale and min frequency must be positive".into()));
        }
        Ok(())
    }
}

/// Word ids of one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub seed: Vec<usize>,
    /// Context ids after trimming; empty without a context encoder.
    pub context: Vec<usize>,
    pub placeholder: usize,
}

/// A ranked expansion term.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub term: String,
    pub label: usize,
    pub probability: f64,
}

struct ContextTrace<F> {
    input: Tensor<F>,
    states: Tensor<F>,
    cache: EncoderCache<F>,
    attention: Option<AttentionCache<F>>,
}

struct Trace<F> {
    seed_vec: Vec<F>,
    x: Vec<F>,
    context: Option<ContextTrace<F>>,
}

/// Parameters plus the vocabularies and label set they are indexed by.
#[derive(Debug, Clone)]
pub struct CaseModel<F: Scalar> {
    config: ModelConfig,
    ctx_vocab: Vocabulary,
    seed_vocab: Vocabulary,
    lexicon: TermLexicon,
    params: ParamStore<F>,
    ctx_emb: Option<ParamId>,
    seed_emb: ParamId,
    head_w: ParamId,
    head_b: ParamId,
    encoder: Option<ContextEncoder>,
    attention: Option<Attention>,
}

/// Seed vocabulary: every word of every label term.
pub fn build_seed_vocab(lexicon: &TermLexicon) -> Vocabulary {
    Vocabulary::from_counts(lexicon.terms().iter().flat_map(|t| t.split('_')).filter(|w| !w.is_empty()), 1)
}

impl<F: Scalar> CaseModel<F> {
    /// Builds the vocabularies and label set from training records and
    /// initialises a fresh model.
    pub fn build(train: &[AnnotatedSentence], config: ModelConfig, pretrained: Option<&DualEmbedding>, seed: u64) -> Result<Self> {
        let lexicon = crate::corpus::build_lexicon(train);
        let ctx_vocab = crate::corpus::build_vocab(train, config.min_freq);
        let seed_vocab = build_seed_vocab(&lexicon);
        Self::new(config, ctx_vocab, seed_vocab, lexicon, pretrained, seed)
    }

    pub fn new(
        config: ModelConfig,
        ctx_vocab: Vocabulary,
        seed_vocab: Vocabulary,
        lexicon: TermLexicon,
        pretrained: Option<&DualEmbedding>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if lexicon.is_empty() {
            return Err(Error::EmptyInput("label set"));
        }
        let d = config.hp.dim;
        if let Some(p) = pretrained {
            if p.dim() != d {
                return Err(Error::InvalidConfig(alloc::format!(
                    "pretrained dimension {} differs from model dimension {d}",
                    p.dim()
                )));
            }
        }
        let mut rng = derive_rng(seed, "init");
        let mut params = ParamStore::new();
        let table = |vocab: &Vocabulary, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut t: Tensor<F> = uniform(&[vocab.len(), d], config.init_scale, rng);
            t.row_mut(Vocabulary::PAD).fill(F::zero());
            if let Some(p) = pretrained {
                for (i, w) in vocab.words().iter().enumerate() {
                    let src = match p.vocab().get(w) {
                        Some(j) => p.table(Side::In).row(j),
                        None if i == Vocabulary::OOV => p.table(Side::In).row(Vocabulary::OOV),
                        None => continue,
                    };
                    for (dst, s) in t.row_mut(i).iter_mut().zip(src) {
                        *dst = F::lit(f64::from(*s));
                    }
                }
            }
            t
        };
        let seed_emb = params.add("seed_emb", table(&seed_vocab, &mut rng))?;
        let mut ctx_emb = None;
        let mut encoder = None;
        let mut attention = None;
        let mut width = d;
        if config.encoder != EncoderKind::None {
            ctx_emb = Some(params.add("ctx_emb", table(&ctx_vocab, &mut rng))?);
            let enc = ContextEncoder::register(&mut params, config.encoder, &config.hp, &mut rng)?
                .expect("encoder kind is not none");
            if config.attention != AttentionKind::None {
                attention = Some(Attention::register(
                    &mut params,
                    config.attention,
                    enc.state_width(),
                    d,
                    config.hp.attn_dim,
                    &mut rng,
                )?);
            }
            width += enc.pooled_width();
            encoder = Some(enc);
        }
        let head_w = params.add("head.w", uniform(&[lexicon.len(), width], config.init_scale, &mut rng))?;
        let head_b = params.add("head.b", Tensor::zeros(&[lexicon.len()]))?;
        Ok(CaseModel { config, ctx_vocab, seed_vocab, lexicon, params, ctx_emb, seed_emb, head_w, head_b, encoder, attention })
    }

    /// Reassembles a model from stored parameters; every expected parameter
    /// must be present with the expected shape and nothing else.
    pub fn from_parts(
        config: ModelConfig,
        ctx_vocab: Vocabulary,
        seed_vocab: Vocabulary,
        lexicon: TermLexicon,
        stored: ParamStore<F>,
    ) -> Result<Self> {
        let mut model = Self::new(config, ctx_vocab, seed_vocab, lexicon, None, 0)?;
        if stored.len() != model.params.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "expected {} parameters, found {}",
                model.params.len(),
                stored.len()
            )));
        }
        for id in model.params.ids().collect::<Vec<_>>() {
            let name = model.params.name(id).to_string();
            let src = stored.id(&name)?;
            model.params.set_value(id, stored.value(src).clone())?;
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn context_vocab(&self) -> &Vocabulary {
        &self.ctx_vocab
    }

    pub fn seed_vocab(&self) -> &Vocabulary {
        &self.seed_vocab
    }

    pub fn lexicon(&self) -> &TermLexicon {
        &self.lexicon
    }

    pub fn params(&self) -> &ParamStore<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<F> {
        &mut self.params
    }

    /// Width of the prediction layer input.
    pub fn input_width(&self) -> usize {
        self.params.value(self.head_w).cols()
    }

    /// Maps a seed term and a tokenised context to word ids.
    pub fn encode<S: AsRef<str>>(&self, seed: &str, context: &[S]) -> Result<Encoded> {
        let seed_ids: Vec<usize> = seed.split('_').filter(|w| !w.is_empty()).map(|w| self.seed_vocab.id(w)).collect();
        if seed_ids.is_empty() {
            return Err(Error::EmptyInput("seed term"));
        }
        if self.encoder.is_none() {
            return Ok(Encoded { seed: seed_ids, context: Vec::new(), placeholder: 0 });
        }
        if context.is_empty() {
            return Err(Error::EmptyInput("context"));
        }
        let p = find_placeholder(context)?;
        let window = trim_window(context.len(), p, self.config.hp.max_len);
        let ids = context[window.clone()]
            .iter()
            .map(|t| self.ctx_vocab.id(t.as_ref()))
            .filter(|id| *id != Vocabulary::PAD)
            .collect();
        Ok(Encoded { seed: seed_ids, context: ids, placeholder: p - window.start })
    }

    fn forward(&self, v: Values<'_, F>, e: &Encoded) -> Result<Trace<F>> {
        let d = self.config.hp.dim;
        let mut seed_vec = vec![F::zero(); d];
        for &id in &e.seed {
            axpy(F::one(), v[self.seed_emb].row(id), &mut seed_vec);
        }
        let inv = F::one() / F::lit(e.seed.len() as f64);
        seed_vec.iter_mut().for_each(|s| *s *= inv);
        let mut x = seed_vec.clone();
        let mut context = None;
        if let (Some(enc), Some(table)) = (&self.encoder, self.ctx_emb) {
            let n = e.context.len();
            let mut input = Tensor::zeros(&[n, d]);
            for (i, &id) in e.context.iter().enumerate() {
                input.row_mut(i).copy_from_slice(v[table].row(id));
            }
            let (out, cache) = enc.forward(v, &input, e.placeholder)?;
            let (pooled, attn) = match &self.attention {
                Some(a) => {
                    let (p, c) = a.forward(v, &out.states, &seed_vec)?;
                    (p, Some(c))
                }
                None => (out.pooled, None),
            };
            x.extend_from_slice(&pooled);
            context = Some(ContextTrace { input, states: out.states, cache, attention: attn });
        }
        Ok(Trace { seed_vec, x, context })
    }

    fn backward(&self, v: Values<'_, F>, g: &mut Grads<'_, F>, e: &Encoded, trace: &Trace<F>, dx: &[F]) {
        let d = self.config.hp.dim;
        let mut d_seed = dx[..d].to_vec();
        if let (Some(enc), Some(table), Some(ct)) = (&self.encoder, self.ctx_emb, &trace.context) {
            let d_ctx = &dx[d..];
            let d_input = match (&self.attention, &ct.attention) {
                (Some(a), Some(ac)) => {
                    let mut d_states = Tensor::zeros(ct.states.shape());
                    a.backward(v, g, &ct.states, &trace.seed_vec, ac, d_ctx, &mut d_states, &mut d_seed);
                    enc.backward(v, g, &ct.input, &ct.cache, Some(&d_states), None)
                }
                _ => enc.backward(v, g, &ct.input, &ct.cache, None, Some(d_ctx)),
            };
            for (i, &id) in e.context.iter().enumerate() {
                axpy(F::one(), d_input.row(i), g[table].row_mut(id));
            }
        }
        let inv = F::one() / F::lit(e.seed.len() as f64);
        for &id in &e.seed {
            axpy(inv, &d_seed, g[self.seed_emb].row_mut(id));
        }
    }

    /// Prediction-layer input `v_s ⊕ v_C` for a query.
    pub fn features(&self, e: &Encoded) -> Result<Vec<F>> {
        Ok(self.forward(self.params.values(), e)?.x)
    }

    /// `w_tᵀ x + b_t` for every label.
    pub fn logits(&self, x: &[F]) -> Result<Vec<F>> {
        let w = self.params.value(self.head_w);
        if x.len() != w.cols() {
            return Err(Error::ShapeMismatch { expected: vec![w.cols()], actual: vec![x.len()] });
        }
        let b = self.params.value(self.head_b).as_slice();
        Ok((0..w.rows()).map(|t| dot(w.row(t), x) + b[t]).collect())
    }

    /// Full softmax over the label set.
    pub fn probabilities(&self, e: &Encoded) -> Result<Vec<F>> {
        softmax(&self.logits(&self.features(e)?)?)
    }

    /// All labels except the seed's, best first; ties go to the lower id.
    pub fn rank(&self, seed: &str, e: &Encoded) -> Result<Vec<(usize, F)>> {
        let probs = self.probabilities(e)?;
        let skip = self.lexicon.label(seed);
        let mut ranked: Vec<(usize, F)> = probs.into_iter().enumerate().filter(|(l, _)| Some(*l) != skip).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        Ok(ranked)
    }

    /// Top-`k` expansion terms for a seed in a context.
    pub fn expand<S: AsRef<str>>(&self, seed: &str, context: &[S], k: usize) -> Result<Vec<Expansion>> {
        if context.is_empty() {
            return Err(Error::EmptyInput("context"));
        }
        let e = self.encode(seed, context)?;
        let ranked = self.rank(seed, &e)?;
        if k > ranked.len() {
            return Err(Error::InvalidArgument(alloc::format!("k = {k} exceeds the {} rankable terms", ranked.len())));
        }
        Ok(ranked
            .into_iter()
            .take(k)
            .map(|(label, p)| Expansion { term: self.lexicon.term(label).to_string(), label, probability: p.to_f64_lossy() })
            .collect())
    }

    /// Attention weights over the (trimmed) context tokens, if the model
    /// pools with attention.
    pub fn attention_weights<S: AsRef<str>>(&self, seed: &str, context: &[S]) -> Result<Option<Vec<(String, f64)>>> {
        if self.attention.is_none() {
            return Ok(None);
        }
        let e = self.encode(seed, context)?;
        let trace = self.forward(self.params.values(), &e)?;
        let p = find_placeholder(context)?;
        let window = trim_window(context.len(), p, self.config.hp.max_len);
        let weights = &trace.context.as_ref().and_then(|c| c.attention.as_ref()).expect("attention trace").weights;
        Ok(Some(
            context[window]
                .iter()
                .zip(weights)
                .map(|(t, w)| (t.as_ref().to_string(), w.to_f64_lossy()))
                .collect(),
        ))
    }

    /// Mean multi-label loss of a batch over `candidates`; adds the
    /// gradients into the parameter store.
    pub fn accumulate_batch(&mut self, batch: &[(Encoded, Vec<usize>)], candidates: &CandidateSet<F>) -> Result<F> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        let mut params = core::mem::take(&mut self.params);
        let result = self.batch_with(&mut params, batch, candidates);
        self.params = params;
        result
    }

    fn batch_with(&self, params: &mut ParamStore<F>, batch: &[(Encoded, Vec<usize>)], candidates: &CandidateSet<F>) -> Result<F> {
        let (v, mut g) = params.split();
        let traces = batch.iter().map(|(e, _)| self.forward(v, e)).collect::<Result<Vec<_>>>()?;
        let width = traces[0].x.len();
        let mut inputs = Tensor::zeros(&[batch.len(), width]);
        for (i, t) in traces.iter().enumerate() {
            inputs.row_mut(i).copy_from_slice(&t.x);
        }
        let targets: Vec<Vec<usize>> = batch.iter().map(|(_, t)| t.clone()).collect();
        let out = sampled_softmax_loss(&inputs, &v[self.head_w], &v[self.head_b], &targets, candidates)?;
        for (k, &label) in candidates.labels.iter().enumerate() {
            axpy(F::one(), out.d_weights.row(k), g[self.head_w].row_mut(label));
            g[self.head_b].as_mut_slice()[label] += out.d_bias[k];
        }
        for (i, ((e, _), t)) in batch.iter().zip(&traces).enumerate() {
            self.backward(v, &mut g, e, t, out.d_inputs.row(i));
        }
        Ok(out.loss)
    }

    /// Query ids and target labels for every sample of every record;
    /// targets outside the label set are dropped, as are samples left
    /// without targets.
    pub fn prepare(&self, records: &[AnnotatedSentence]) -> Result<Vec<(Encoded, Vec<usize>)>> {
        let mut out = Vec::new();
        for rec in records {
            if rec.terms.len() < 2 {
                continue;
            }
            for s in samples_from_sentence(rec)? {
                let targets: Vec<usize> = s.targets.iter().filter_map(|t| self.lexicon.label(t)).collect();
                if targets.is_empty() {
                    continue;
                }
                out.push((self.encode(s.seed, &rec.context)?, targets));
            }
        }
        Ok(out)
    }

    /// Copy of the model in another scalar type.
    pub fn cast<G: Scalar>(&self) -> CaseModel<G> {
        CaseModel {
            config: self.config,
            ctx_vocab: self.ctx_vocab.clone(),
            seed_vocab: self.seed_vocab.clone(),
            lexicon: self.lexicon.clone(),
            params: self.params.cast(),
            ctx_emb: self.ctx_emb,
            seed_emb: self.seed_emb,
            head_w: self.head_w,
            head_b: self.head_b,
            encoder: self.encoder.clone(),
            attention: self.attention.clone(),
        }
    }
}

#[cfg(test)]
mod tests;

/// Finite-difference check of the whole network's gradients on one batch.
/// Entries whose perturbation changes a max-pool choice are reported as
/// kinks instead of being compared.
pub fn check_gradients(
    model: &mut CaseModel<f64>,
    batch: &[(Encoded, Vec<usize>)],
    candidates: &CandidateSet<f64>,
    eps: f64,
) -> Result<crate::numerics::GradCheckReport> {
    let mut params = core::mem::take(&mut model.params);
    let report = crate::numerics::finite_diff_check_piecewise(&mut params, eps, |p| {
        core::mem::swap(&mut model.params, p);
        let result = model.accumulate_batch(batch, candidates).and_then(|loss| {
            let mut sig = Vec::new();
            for (e, _) in batch {
                let t = model.forward(model.params.values(), e)?;
                if let Some(c) = &t.context {
                    sig.extend_from_slice(c.cache.pool_choices());
                }
            }
            Ok((loss, sig))
        });
        core::mem::swap(&mut model.params, p);
        result
    });
    model.params = params;
    report
}

/// Gradient check of a tiny network: `d = 6`, `d' = 3`, nine labels and a
/// batch of three, with unit-scale weights and log-expected corrections on
/// every label.
pub fn check_tiny_gradients(
    encoder: EncoderKind,
    attention: AttentionKind,
    seed: u64,
    eps: f64,
) -> Result<crate::numerics::GradCheckReport> {
    let rec = |id: &str, context: &str, terms: &[&str]| AnnotatedSentence {
        id: id.into(),
        context: context.split_whitespace().map(ToString::to_string).collect(),
        terms: terms.iter().map(|t| t.to_string()).collect(),
        hypernym_span: None,
    };
    let corpus = [
        rec("a", "we eat PLACEHOLDER and other fruit every day", &["apple", "pear", "plum"]),
        rec("b", "the zoo keep PLACEHOLDER and other animal", &["lion", "tiger", "bear"]),
        rec("c", "fruit such as PLACEHOLDER taste sweet", &["fig", "mango", "kiwi"]),
    ];
    let config = ModelConfig {
        encoder,
        attention,
        hp: HyperParams { dim: 6, attn_dim: 3, max_len: 8, pos_dim: 2, cnn_window: 3, cnn_filters: 6 },
        min_freq: 1,
        init_scale: 1.5,
    };
    let mut model = CaseModel::<f64>::build(&corpus, config, None, seed)?;
    let batch: Vec<_> = model.prepare(&corpus)?.into_iter().step_by(3).take(3).collect();
    let n = model.lexicon().len();
    let candidates = CandidateSet { labels: (0..n).collect(), log_expected: (0..n).map(|i| -0.1 * i as f64).collect() };
    check_gradients(&mut model, &batch, &candidates, eps)
}
