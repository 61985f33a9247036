//! Attention pooling of per-position states, optionally conditioned on the
//! seed vector.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::{uniform, AttentionKind};
use crate::numerics::linalg::{axpy, dot, gemv_acc, gemv_t_acc, outer_acc};
use crate::numerics::{softmax, Grads, ParamId, ParamStore, Scalar, Tensor, Values};
use crate::{Error, Result};

/// Scoring parameters. `w_a` exists for the oblivious and concat scorers;
/// `W_a` maps states (or `[v_s; state]` for concat) to `d'` dimensions, or
/// to the seed width for trans-dot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attention {
    pub kind: AttentionKind,
    pub state_dim: usize,
    pub seed_dim: usize,
    small_w: Option<ParamId>,
    big_w: Option<ParamId>,
}

#[derive(Debug, Clone)]
pub struct AttentionCache<F> {
    pub weights: Vec<F>,
    /// `tanh(W_a ·)` per position for the scorers that have one.
    hidden: Vec<Vec<F>>,
}

impl Attention {
    pub fn register<F: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        kind: AttentionKind,
        state_dim: usize,
        seed_dim: usize,
        attn_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let (small, big) = match kind {
            AttentionKind::None => {
                return Err(Error::InvalidConfig("attention pooling needs a scorer".into()));
            }
            AttentionKind::Oblivious => (Some(attn_dim), Some([attn_dim, state_dim])),
            AttentionKind::Concat => (Some(attn_dim), Some([attn_dim, seed_dim + state_dim])),
            AttentionKind::TransDot => (None, Some([seed_dim, state_dim])),
            AttentionKind::Dot => {
                if seed_dim != state_dim {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "dot attention needs state width {state_dim} to equal seed width {seed_dim}"
                    )));
                }
                (None, None)
            }
        };
        let big_w = match big {
            Some(shape) => {
                let scale = 1.0 / Float::sqrt(shape[1] as f64);
                Some(store.add("attn.W", uniform(&shape, scale, rng))?)
            }
            None => None,
        };
        let small_w = match small {
            Some(n) => Some(store.add("attn.w", uniform(&[n], 1.0 / Float::sqrt(n as f64), rng))?),
            None => None,
        };
        Ok(Attention { kind, state_dim, seed_dim, small_w, big_w })
    }

    fn scorer_input<'a, F: Scalar>(&self, seed: &[F], state: &'a [F], buf: &'a mut Vec<F>) -> &'a [F] {
        if self.kind == AttentionKind::Concat {
            buf.clear();
            buf.extend_from_slice(seed);
            buf.extend_from_slice(state);
            buf
        } else {
            state
        }
    }

    /// Returns the attended vector `Σ α_i h_i`.
    pub fn forward<F: Scalar>(
        &self,
        v: Values<'_, F>,
        states: &Tensor<F>,
        seed: &[F],
    ) -> Result<(Vec<F>, AttentionCache<F>)> {
        let n = states.rows();
        if n == 0 {
            return Err(Error::EmptyInput("attention over an empty context"));
        }
        let mut scores = Vec::with_capacity(n);
        let mut hidden = Vec::new();
        let mut buf = Vec::new();
        for i in 0..n {
            let h = states.row(i);
            let e = match self.kind {
                AttentionKind::Dot => dot(seed, h),
                _ => {
                    let big = v[self.big_w.expect("scorer matrix")].as_slice();
                    let input = self.scorer_input(seed, h, &mut buf);
                    let rows = big.len() / input.len();
                    let mut u = vec![F::zero(); rows];
                    gemv_acc(big, input.len(), input, &mut u);
                    u.iter_mut().for_each(|x| *x = x.tanh());
                    let e = match self.small_w {
                        Some(w) => dot(v[w].as_slice(), &u),
                        None => dot(seed, &u),
                    };
                    hidden.push(u);
                    e
                }
            };
            scores.push(e);
        }
        let weights = softmax(&scores)?;
        let mut out = vec![F::zero(); states.cols()];
        for (i, a) in weights.iter().enumerate() {
            axpy(*a, states.row(i), &mut out);
        }
        Ok((out, AttentionCache { weights, hidden }))
    }

    /// Backward of [`Attention::forward`]: adds state gradients to
    /// `d_states` and seed gradients to `d_seed`.
    #[allow(clippy::too_many_arguments)]
    pub fn backward<F: Scalar>(
        &self,
        v: Values<'_, F>,
        g: &mut Grads<'_, F>,
        states: &Tensor<F>,
        seed: &[F],
        cache: &AttentionCache<F>,
        d_out: &[F],
        d_states: &mut Tensor<F>,
        d_seed: &mut [F],
    ) {
        let n = states.rows();
        let alpha = &cache.weights;
        let d_alpha: Vec<F> = (0..n).map(|i| dot(d_out, states.row(i))).collect();
        let mean: F = alpha.iter().zip(&d_alpha).map(|(a, d)| *a * *d).sum();
        let mut buf = Vec::new();
        let mut d_input = Vec::new();
        for i in 0..n {
            axpy(alpha[i], d_out, d_states.row_mut(i));
            let de = alpha[i] * (d_alpha[i] - mean);
            if self.kind == AttentionKind::Dot {
                axpy(de, states.row(i), d_seed);
                axpy(de, seed, d_states.row_mut(i));
                continue;
            }
            let u = &cache.hidden[i];
            let mut du = vec![F::zero(); u.len()];
            match self.small_w {
                Some(w) => {
                    axpy(de, u, g[w].as_mut_slice());
                    axpy(de, v[w].as_slice(), &mut du);
                }
                None => {
                    axpy(de, u, d_seed);
                    axpy(de, seed, &mut du);
                }
            }
            for (d, x) in du.iter_mut().zip(u) {
                *d *= F::one() - *x * *x;
            }
            let big = self.big_w.expect("scorer matrix");
            let input = self.scorer_input(seed, states.row(i), &mut buf);
            outer_acc(g[big].as_mut_slice(), &du, input);
            d_input.clear();
            d_input.resize(input.len(), F::zero());
            gemv_t_acc(v[big].as_slice(), input.len(), &du, &mut d_input);
            if self.kind == AttentionKind::Concat {
                axpy(F::one(), &d_input[..self.seed_dim], d_seed);
                axpy(F::one(), &d_input[self.seed_dim..], d_states.row_mut(i));
            } else {
                axpy(F::one(), &d_input, d_states.row_mut(i));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_rng;

    fn states() -> Tensor<f64> {
        Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn dot_scores_ln3() {
        // scores (0, ln 3) → α = (1/4, 3/4)
        let mut s = ParamStore::<f64>::new();
        let a = Attention::register(&mut s, AttentionKind::Dot, 2, 2, 10, &mut derive_rng(0, "a")).unwrap();
        let seed = [0.0, 3f64.ln()];
        let (out, cache) = a.forward(s.values(), &states(), &seed).unwrap();
        assert!((cache.weights[0] - 0.25).abs() < 1e-12 && (cache.weights[1] - 0.75).abs() < 1e-12);
        assert!((out[0] - 0.25).abs() < 1e-12 && (out[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn zero_transform_is_uniform() {
        let mut s = ParamStore::<f64>::new();
        let a = Attention::register(&mut s, AttentionKind::TransDot, 2, 3, 10, &mut derive_rng(0, "a")).unwrap();
        s.value_mut(s.id("attn.W").unwrap()).fill(0.0);
        let (out, cache) = a.forward(s.values(), &states(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cache.weights, [0.5, 0.5]);
        assert_eq!(out, [0.5, 0.5]);
    }

    #[test]
    fn single_position() {
        for kind in [AttentionKind::Oblivious, AttentionKind::Concat, AttentionKind::TransDot] {
            let mut s = ParamStore::<f64>::new();
            let a = Attention::register(&mut s, kind, 2, 2, 4, &mut derive_rng(0, "a")).unwrap();
            let st = Tensor::from_vec(&[1, 2], vec![0.3, -0.7]).unwrap();
            let (out, cache) = a.forward(s.values(), &st, &[1.0, 1.0]).unwrap();
            assert_eq!(cache.weights, [1.0]);
            assert_eq!(out, [0.3, -0.7]);
        }
    }

    #[test]
    fn dot_needs_matching_widths() {
        let mut s = ParamStore::<f64>::new();
        assert!(Attention::register(&mut s, AttentionKind::Dot, 3, 2, 4, &mut derive_rng(0, "a")).is_err());
    }
}
