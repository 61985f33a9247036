//! Context encoders, attention pooling and their backward passes.
//!
//! Encoders see a context as an `n x d` matrix of word vectors with padding
//! already removed, so padding never reaches a mean, a max or a softmax.

mod attention;
mod cnn;
mod recurrent;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::numerics::{Grads, ParamStore, Scalar, Tensor, Values};
use crate::{Error, Result};

pub use attention::{Attention, AttentionCache};
pub use cnn::{Conv, ConvCache};
pub use recurrent::{Cell, CellKind, RunCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EncoderKind {
    Nbow,
    Rnn,
    Gru,
    Lstm,
    BiLstm,
    Cnn,
    /// CNN over word vectors concatenated with placeholder-relative position vectors.
    CnnPf,
    /// Left-to-right LSTM before the placeholder, right-to-left after it.
    C2v,
    /// Context ignored; only the seed feeds the prediction layer.
    None,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 9] = [
        EncoderKind::Nbow,
        EncoderKind::Rnn,
        EncoderKind::Gru,
        EncoderKind::Lstm,
        EncoderKind::BiLstm,
        EncoderKind::Cnn,
        EncoderKind::CnnPf,
        EncoderKind::C2v,
        EncoderKind::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::Nbow => "nbow",
            EncoderKind::Rnn => "rnn",
            EncoderKind::Gru => "gru",
            EncoderKind::Lstm => "lstm",
            EncoderKind::BiLstm => "bilstm",
            EncoderKind::Cnn => "cnn",
            EncoderKind::CnnPf => "cnn_pf",
            EncoderKind::C2v => "c2v",
            EncoderKind::None => "none",
        }
    }

    /// Whether per-position states exist for attention to pool over.
    pub fn supports_attention(self) -> bool {
        !matches!(self, EncoderKind::C2v | EncoderKind::None)
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown encoder {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttentionKind {
    None,
    /// Seed-oblivious: `w_aᵀ tanh(W_a h_i)`.
    Oblivious,
    /// `v_sᵀ h_i`.
    Dot,
    /// `w_aᵀ tanh(W_a [v_s; h_i])`.
    Concat,
    /// `v_sᵀ tanh(W_a h_i)`.
    TransDot,
}

impl AttentionKind {
    pub const ALL: [AttentionKind; 5] = [
        AttentionKind::None,
        AttentionKind::Oblivious,
        AttentionKind::Dot,
        AttentionKind::Concat,
        AttentionKind::TransDot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttentionKind::None => "none",
            AttentionKind::Oblivious => "attn",
            AttentionKind::Dot => "dot",
            AttentionKind::Concat => "concat",
            AttentionKind::TransDot => "trans_dot",
        }
    }
}

impl fmt::Display for AttentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown attention {s:?}")))
    }
}

/// Rejects encoder/attention pairs that have no meaning.
pub fn validate_combo(encoder: EncoderKind, attention: AttentionKind) -> Result<()> {
    if attention != AttentionKind::None && !encoder.supports_attention() {
        return Err(Error::InvalidConfig(alloc::format!(
            "encoder {encoder} has no per-position states for attention {attention}"
        )));
    }
    Ok(())
}

/// Architecture sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperParams {
    /// Word embedding and state width.
    pub dim: usize,
    /// Hidden width of the attention scorers.
    pub attn_dim: usize,
    /// Contexts longer than this are cut to a window around the placeholder.
    pub max_len: usize,
    pub pos_dim: usize,
    pub cnn_window: usize,
    pub cnn_filters: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams { dim: 100, attn_dim: 10, max_len: 100, pos_dim: 10, cnn_window: 3, cnn_filters: 100 }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.dim, self.attn_dim, self.max_len, self.pos_dim, self.cnn_window, self.cnn_filters];
        if all.contains(&0) {
            return Err(Error::InvalidConfig("encoder sizes must be positive".into()));
        }
        Ok(())
    }

    /// Largest placeholder distance with its own position vector.
    pub fn max_distance(&self) -> usize {
        self.max_len / 2
    }
}

pub(crate) fn uniform<F: Scalar, R: Rng + ?Sized>(shape: &[usize], scale: f64, rng: &mut R) -> Tensor<F> {
    let n = shape.iter().product();
    let data = (0..n).map(|_| F::lit(rng.gen_range(-scale..=scale))).collect();
    Tensor::from_vec(shape, data).expect("shape matches data")
}

/// Output of a context encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextEncoding<F> {
    /// One row per context position; empty for encoders without them.
    pub states: Tensor<F>,
    pub pooled: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Body {
    Nbow,
    Recurrent(Cell),
    BiLstm(Cell, Cell),
    Cnn(Conv),
    C2v(Cell, Cell),
}

#[derive(Debug, Clone)]
enum BodyCache<F> {
    Nbow,
    Recurrent(RunCache<F>),
    Pair(RunCache<F>, RunCache<F>),
    Cnn(ConvCache<F>),
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache<F> {
    body: BodyCache<F>,
}

/// A context encoder's parameter handles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextEncoder {
    pub kind: EncoderKind,
    dim: usize,
    body: Body,
}

impl<F> EncoderCache<F> {
    /// Positions selected by max-pooling, empty for smooth encoders.
    pub fn pool_choices(&self) -> &[usize] {
        match &self.body {
            BodyCache::Cnn(c) => c.argmax(),
            _ => &[],
        }
    }
}

impl ContextEncoder {
    /// Adds the encoder's parameters under the `enc.` prefix; `None` for
    /// [`EncoderKind::None`].
    pub fn register<F: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        kind: EncoderKind,
        hp: &HyperParams,
        rng: &mut R,
    ) -> Result<Option<Self>> {
        hp.validate()?;
        let d = hp.dim;
        let (left, right) = (d / 2, d - d / 2);
        let body = match kind {
            EncoderKind::None => return Ok(None),
            EncoderKind::Nbow => Body::Nbow,
            EncoderKind::Rnn => Body::Recurrent(Cell::register(store, "enc", CellKind::Vanilla, d, d, rng)?),
            EncoderKind::Gru => Body::Recurrent(Cell::register(store, "enc", CellKind::Gru, d, d, rng)?),
            EncoderKind::Lstm => Body::Recurrent(Cell::register(store, "enc", CellKind::Lstm, d, d, rng)?),
            EncoderKind::BiLstm | EncoderKind::C2v => {
                if left == 0 {
                    return Err(Error::InvalidConfig("two-direction encoders need dim >= 2".into()));
                }
                let (a, b) = if kind == EncoderKind::BiLstm { ("enc.fwd", "enc.bwd") } else { ("enc.left", "enc.right") };
                let fwd = Cell::register(store, a, CellKind::Lstm, d, left, rng)?;
                let bwd = Cell::register(store, b, CellKind::Lstm, d, right, rng)?;
                if kind == EncoderKind::BiLstm {
                    Body::BiLstm(fwd, bwd)
                } else {
                    Body::C2v(fwd, bwd)
                }
            }
            EncoderKind::Cnn | EncoderKind::CnnPf => {
                let pos = (kind == EncoderKind::CnnPf).then_some((hp.pos_dim, hp.max_distance()));
                Body::Cnn(Conv::register(store, "enc", d, hp.cnn_window, hp.cnn_filters, pos, rng)?)
            }
        };
        Ok(Some(ContextEncoder { kind, dim: d, body }))
    }

    pub fn state_width(&self) -> usize {
        match &self.body {
            Body::Cnn(c) => c.filters,
            _ => self.dim,
        }
    }

    pub fn pooled_width(&self) -> usize {
        self.state_width()
    }

    /// Encodes the `n x d` word matrix `x`; `placeholder` is the row holding
    /// the placeholder token.
    pub fn forward<F: Scalar>(
        &self,
        v: Values<'_, F>,
        x: &Tensor<F>,
        placeholder: usize,
    ) -> Result<(ContextEncoding<F>, EncoderCache<F>)> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::EmptyInput("context"));
        }
        x.ensure_shape(&[n, self.dim])?;
        if placeholder >= n {
            return Err(Error::InvalidArgument(alloc::format!("placeholder row {placeholder} outside {n} rows")));
        }
        let all: Vec<usize> = (0..n).collect();
        let (enc, body) = match &self.body {
            Body::Nbow => {
                let mut pooled = vec![F::zero(); self.dim];
                for i in 0..n {
                    crate::numerics::linalg::axpy(F::one(), x.row(i), &mut pooled);
                }
                let inv = F::one() / F::lit(n as f64);
                pooled.iter_mut().for_each(|p| *p *= inv);
                (ContextEncoding { states: x.clone(), pooled }, BodyCache::Nbow)
            }
            Body::Recurrent(cell) => {
                let run = cell.forward(v, x, &all);
                let states = stack(&run.hs[1..], cell.hidden);
                let pooled = run.last().to_vec();
                (ContextEncoding { states, pooled }, BodyCache::Recurrent(run))
            }
            Body::BiLstm(fwd, bwd) => {
                let rev: Vec<usize> = (0..n).rev().collect();
                let (rf, rb) = (fwd.forward(v, x, &all), bwd.forward(v, x, &rev));
                let mut states = Tensor::zeros(&[n, self.dim]);
                for i in 0..n {
                    let row = states.row_mut(i);
                    row[..fwd.hidden].copy_from_slice(&rf.hs[i + 1]);
                    row[fwd.hidden..].copy_from_slice(&rb.hs[n - i]);
                }
                let pooled = concat(rf.last(), rb.last());
                (ContextEncoding { states, pooled }, BodyCache::Pair(rf, rb))
            }
            Body::C2v(left, right) => {
                let lo: Vec<usize> = (0..placeholder).collect();
                let ro: Vec<usize> = (placeholder + 1..n).rev().collect();
                let (rl, rr) = (left.forward(v, x, &lo), right.forward(v, x, &ro));
                let pooled = concat(rl.last(), rr.last());
                (ContextEncoding { states: Tensor::zeros(&[0, self.dim]), pooled }, BodyCache::Pair(rl, rr))
            }
            Body::Cnn(conv) => {
                let cache = conv.forward(v, x, placeholder)?;
                let pooled = conv.pooled(&cache);
                (ContextEncoding { states: cache.states.clone(), pooled }, BodyCache::Cnn(cache))
            }
        };
        Ok((enc, EncoderCache { body }))
    }

    /// Backward pass given gradients on the states and/or the pooled vector.
    /// Returns the gradient on `x` and accumulates parameter gradients.
    pub fn backward<F: Scalar>(
        &self,
        v: Values<'_, F>,
        g: &mut Grads<'_, F>,
        x: &Tensor<F>,
        cache: &EncoderCache<F>,
        d_states: Option<&Tensor<F>>,
        d_pooled: Option<&[F]>,
    ) -> Tensor<F> {
        let n = x.rows();
        let mut dx = Tensor::zeros(&[n, self.dim]);
        match (&self.body, &cache.body) {
            (Body::Nbow, BodyCache::Nbow) => {
                if let Some(ds) = d_states {
                    dx.as_mut_slice().copy_from_slice(ds.as_slice());
                }
                if let Some(dp) = d_pooled {
                    let inv = F::one() / F::lit(n as f64);
                    for i in 0..n {
                        crate::numerics::linalg::axpy(inv, dp, dx.row_mut(i));
                    }
                }
            }
            (Body::Recurrent(cell), BodyCache::Recurrent(run)) => {
                let h = cell.hidden;
                let mut dh: Vec<Vec<F>> = (0..n)
                    .map(|i| d_states.map_or_else(|| vec![F::zero(); h], |d| d.row(i).to_vec()))
                    .collect();
                if let Some(dp) = d_pooled {
                    crate::numerics::linalg::axpy(F::one(), dp, &mut dh[n - 1]);
                }
                cell.backward(v, g, x, run, &dh, &mut dx);
            }
            (Body::BiLstm(fwd, bwd), BodyCache::Pair(rf, rb)) => {
                let hf = fwd.hidden;
                let mut dhf: Vec<Vec<F>> = vec![vec![F::zero(); hf]; n];
                let mut dhb: Vec<Vec<F>> = vec![vec![F::zero(); bwd.hidden]; n];
                if let Some(ds) = d_states {
                    for i in 0..n {
                        dhf[i].copy_from_slice(&ds.row(i)[..hf]);
                        dhb[n - 1 - i].copy_from_slice(&ds.row(i)[hf..]);
                    }
                }
                if let Some(dp) = d_pooled {
                    crate::numerics::linalg::axpy(F::one(), &dp[..hf], &mut dhf[n - 1]);
                    crate::numerics::linalg::axpy(F::one(), &dp[hf..], &mut dhb[n - 1]);
                }
                fwd.backward(v, g, x, rf, &dhf, &mut dx);
                bwd.backward(v, g, x, rb, &dhb, &mut dx);
            }
            (Body::C2v(left, right), BodyCache::Pair(rl, rr)) => {
                if let Some(dp) = d_pooled {
                    let hl = left.hidden;
                    for (cell, run, part) in [(left, rl, &dp[..hl]), (right, rr, &dp[hl..])] {
                        let steps = run.order.len();
                        if steps == 0 {
                            continue;
                        }
                        let mut dh = vec![vec![F::zero(); cell.hidden]; steps];
                        dh[steps - 1].copy_from_slice(part);
                        cell.backward(v, g, x, run, &dh, &mut dx);
                    }
                }
            }
            (Body::Cnn(conv), BodyCache::Cnn(c)) => {
                dx = conv.backward(v, g, c, d_states, d_pooled, self.dim);
            }
            _ => unreachable!("cache produced by a different encoder"),
        }
        dx
    }
}

fn stack<F: Scalar>(rows: &[Vec<F>], width: usize) -> Tensor<F> {
    let data = rows.iter().flatten().copied().collect();
    Tensor::from_vec(&[rows.len(), width], data).expect("rows share a width")
}

fn concat<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}
