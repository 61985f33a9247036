//! Same-padded 1-D convolution with tanh and max-over-time pooling,
//! optionally fed with placeholder-relative position vectors.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::uniform;
use crate::numerics::linalg::{gemv_acc, gemv_t_acc, outer_acc};
use crate::numerics::{Grads, ParamId, ParamStore, Scalar, Tensor, Values};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conv {
    pub input: usize,
    pub window: usize,
    pub filters: usize,
    w: ParamId,
    b: ParamId,
    /// Position table (`2·max_distance + 1` rows) and its clamp distance.
    pos: Option<(ParamId, usize)>,
}

#[derive(Debug, Clone)]
pub struct ConvCache<F> {
    /// Convolution inputs, word vectors with position vectors appended.
    u: Tensor<F>,
    pos_rows: Vec<usize>,
    pub states: Tensor<F>,
    argmax: Vec<usize>,
}

impl<F> ConvCache<F> {
    /// Position chosen by the max-pool for each filter.
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

impl Conv {
    pub fn register<F: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        prefix: &str,
        word_dim: usize,
        window: usize,
        filters: usize,
        position: Option<(usize, usize)>,
        rng: &mut R,
    ) -> Result<Self> {
        let pos_dim = position.map_or(0, |p| p.0);
        let input = word_dim + pos_dim;
        let scale = 1.0 / Float::sqrt((window * input) as f64);
        let w = store.add(&alloc::format!("{prefix}.W"), uniform(&[filters, window * input], scale, rng))?;
        let b = store.add(&alloc::format!("{prefix}.b"), Tensor::zeros(&[filters]))?;
        let pos = match position {
            Some((dim, max_distance)) => Some((
                store.add(&alloc::format!("{prefix}.pos"), uniform(&[2 * max_distance + 1, dim], 0.05, rng))?,
                max_distance,
            )),
            None => None,
        };
        Ok(Conv { input, window, filters, w, b, pos })
    }

    fn window_inputs<F: Scalar>(&self, u: &Tensor<F>, i: usize, buf: &mut [F]) {
        let n = u.rows() as isize;
        let off = (self.window / 2) as isize;
        for k in 0..self.window {
            let j = i as isize + k as isize - off;
            let dst = &mut buf[k * self.input..(k + 1) * self.input];
            if (0..n).contains(&j) {
                dst.copy_from_slice(u.row(j as usize));
            } else {
                dst.iter_mut().for_each(|v| *v = F::zero());
            }
        }
    }

    pub fn forward<F: Scalar>(&self, v: Values<'_, F>, x: &Tensor<F>, placeholder: usize) -> Result<ConvCache<F>> {
        let n = x.rows();
        let word_dim = x.cols();
        let mut u = Tensor::zeros(&[n, self.input]);
        let mut pos_rows = Vec::new();
        for i in 0..n {
            u.row_mut(i)[..word_dim].copy_from_slice(x.row(i));
            if let Some((table, max)) = self.pos {
                let dist = (i as isize - placeholder as isize).clamp(-(max as isize), max as isize);
                let r = (dist + max as isize) as usize;
                u.row_mut(i)[word_dim..].copy_from_slice(v[table].row(r));
                pos_rows.push(r);
            }
        }
        let (w, b) = (v[self.w].as_slice(), v[self.b].as_slice());
        let mut states = Tensor::zeros(&[n, self.filters]);
        let mut buf = vec![F::zero(); self.window * self.input];
        for i in 0..n {
            self.window_inputs(&u, i, &mut buf);
            let s = states.row_mut(i);
            s.copy_from_slice(b);
            gemv_acc(w, buf.len(), &buf, s);
            s.iter_mut().for_each(|a| *a = a.tanh());
        }
        let argmax = (0..self.filters)
            .map(|f| {
                let mut best = 0;
                for i in 1..n {
                    if states.row(i)[f] > states.row(best)[f] {
                        best = i;
                    }
                }
                best
            })
            .collect();
        Ok(ConvCache { u, pos_rows, states, argmax })
    }

    pub fn pooled<F: Scalar>(&self, cache: &ConvCache<F>) -> Vec<F> {
        cache.argmax.iter().enumerate().map(|(f, &i)| cache.states.row(i)[f]).collect()
    }

    /// Gradient through the convolution given gradients on the per-position
    /// states and on the max-pooled vector; returns the word-input gradient.
    pub fn backward<F: Scalar>(
        &self,
        v: Values<'_, F>,
        g: &mut Grads<'_, F>,
        cache: &ConvCache<F>,
        d_states: Option<&Tensor<F>>,
        d_pooled: Option<&[F]>,
        word_dim: usize,
    ) -> Tensor<F> {
        let n = cache.states.rows();
        let mut da = match d_states {
            Some(d) => d.clone(),
            None => Tensor::zeros(&[n, self.filters]),
        };
        if let Some(dp) = d_pooled {
            for (f, &i) in cache.argmax.iter().enumerate() {
                da.row_mut(i)[f] += dp[f];
            }
        }
        let w = v[self.w].as_slice();
        let cols = self.window * self.input;
        let mut du = Tensor::zeros(&[n, self.input]);
        let mut buf = vec![F::zero(); cols];
        let mut dbuf = vec![F::zero(); cols];
        let off = (self.window / 2) as isize;
        for i in 0..n {
            let s = cache.states.row(i);
            let dai = da.row_mut(i);
            for (d, a) in dai.iter_mut().zip(s) {
                *d *= F::one() - *a * *a;
            }
            let dai = da.row(i);
            self.window_inputs(&cache.u, i, &mut buf);
            outer_acc(g[self.w].as_mut_slice(), dai, &buf);
            for (db, d) in g[self.b].as_mut_slice().iter_mut().zip(dai) {
                *db += *d;
            }
            dbuf.iter_mut().for_each(|v| *v = F::zero());
            gemv_t_acc(w, cols, dai, &mut dbuf);
            for k in 0..self.window {
                let j = i as isize + k as isize - off;
                if (0..n as isize).contains(&j) {
                    let src = &dbuf[k * self.input..(k + 1) * self.input];
                    for (d, s) in du.row_mut(j as usize).iter_mut().zip(src) {
                        *d += *s;
                    }
                }
            }
        }
        let mut dx = Tensor::zeros(&[n, word_dim]);
        for i in 0..n {
            dx.row_mut(i).copy_from_slice(&du.row(i)[..word_dim]);
            if let Some((table, _)) = self.pos {
                let r = cache.pos_rows[i];
                for (d, s) in g[table].row_mut(r).iter_mut().zip(&du.row(i)[word_dim..]) {
                    *d += *s;
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_rng;

    #[test]
    fn hand_convolution() {
        // 4 tokens of width 1, one filter [1, -1, 2], bias 0.1, window 3
        let mut s = ParamStore::<f64>::new();
        let conv = Conv::register(&mut s, "cnn", 1, 3, 1, None, &mut derive_rng(0, "c")).unwrap();
        s.set_value(s.id("cnn.W").unwrap(), Tensor::from_vec(&[1, 3], vec![1.0, -1.0, 2.0]).unwrap()).unwrap();
        s.set_value(s.id("cnn.b").unwrap(), Tensor::from_vec(&[1], vec![0.1]).unwrap()).unwrap();
        let x = Tensor::from_vec(&[4, 1], vec![0.5, -0.2, 0.3, 0.1]).unwrap();
        let cache = conv.forward(s.values(), &x, 0).unwrap();
        let xs = [0.0, 0.5, -0.2, 0.3, 0.1, 0.0];
        let want: Vec<f64> = (0..4).map(|i| (xs[i] - xs[i + 1] + 2.0 * xs[i + 2] + 0.1f64).tanh()).collect();
        for i in 0..4 {
            assert!((cache.states.row(i)[0] - want[i]).abs() < 1e-12);
        }
        let best = want.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((conv.pooled(&cache)[0] - best).abs() < 1e-12);
    }

    #[test]
    fn zero_filters_pool_to_zero() {
        let mut s = ParamStore::<f64>::new();
        let conv = Conv::register(&mut s, "cnn", 2, 3, 4, Some((2, 5)), &mut derive_rng(0, "c")).unwrap();
        s.value_mut(s.id("cnn.W").unwrap()).fill(0.0);
        let x = Tensor::from_vec(&[3, 2], vec![1.0; 6]).unwrap();
        let cache = conv.forward(s.values(), &x, 1).unwrap();
        assert_eq!(conv.pooled(&cache), [0.0; 4]);
    }
}
