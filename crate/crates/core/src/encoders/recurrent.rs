//! Vanilla, GRU and LSTM cells run over a sequence of input rows, with
//! backpropagation through time.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use super::uniform;
use crate::numerics::linalg::{gemv_acc, gemv_t_acc, outer_acc};
use crate::numerics::{sigmoid, Grads, ParamId, ParamStore, Scalar, Tensor, Values};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// `h = tanh(W x + U h' + b)`
    Vanilla,
    /// Update gate `z`, reset gate `r`, `h = (1-z) h' + z tanh(W x + U (r ⊙ h') + b)`.
    Gru,
    /// Input, forget, candidate and output blocks in that order.
    Lstm,
}

impl CellKind {
    fn blocks(self) -> usize {
        match self {
            CellKind::Vanilla => 1,
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

/// A recurrent cell's parameters: `W` is `(B·h) x input`, `U` is
/// `(B·h) x h`, `b` has `B·h` entries for `B` gate blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub kind: CellKind,
    pub input: usize,
    pub hidden: usize,
    w: ParamId,
    u: ParamId,
    b: ParamId,
}

/// Activations of one pass, in processing order.
#[derive(Debug, Clone)]
pub struct RunCache<F> {
    /// Input row index of each step.
    pub order: Vec<usize>,
    /// `hs[0]` is the zero initial state; `hs[t + 1]` is the output of step `t`.
    pub hs: Vec<Vec<F>>,
    cs: Vec<Vec<F>>,
    acts: Vec<Vec<F>>,
}

impl<F: Scalar> RunCache<F> {
    /// Output of the final step, or the zero state for an empty run.
    pub fn last(&self) -> &[F] {
        &self.hs[self.hs.len() - 1]
    }
}

impl Cell {
    pub fn register<F: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        prefix: &str,
        kind: CellKind,
        input: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let rows = kind.blocks() * hidden;
        let scale = 1.0 / Float::sqrt(hidden as f64);
        let w = store.add(&alloc::format!("{prefix}.W"), uniform(&[rows, input], scale, rng))?;
        let u = store.add(&alloc::format!("{prefix}.U"), uniform(&[rows, hidden], scale, rng))?;
        let b = store.add(&alloc::format!("{prefix}.b"), Tensor::zeros(&[rows]))?;
        Ok(Cell { kind, input, hidden, w, u, b })
    }

    /// Runs the cell over the rows of `x` listed in `order`.
    pub fn forward<F: Scalar>(&self, v: Values<'_, F>, x: &Tensor<F>, order: &[usize]) -> RunCache<F> {
        let h = self.hidden;
        let (w, u, b) = (v[self.w].as_slice(), v[self.u].as_slice(), v[self.b].as_slice());
        let mut hs = Vec::with_capacity(order.len() + 1);
        hs.push(vec![F::zero(); h]);
        let mut cs = Vec::new();
        if self.kind == CellKind::Lstm {
            cs.push(vec![F::zero(); h]);
        }
        let mut acts = Vec::with_capacity(order.len());
        for &row in order {
            let xt = x.row(row);
            let hp = &hs[hs.len() - 1];
            let mut a = b.to_vec();
            gemv_acc(w, self.input, xt, &mut a);
            let next = match self.kind {
                CellKind::Vanilla => {
                    gemv_acc(u, h, hp, &mut a);
                    a.iter_mut().for_each(|v| *v = v.tanh());
                    a.clone()
                }
                CellKind::Lstm => {
                    gemv_acc(u, h, hp, &mut a);
                    for (k, v) in a.iter_mut().enumerate() {
                        *v = if k / h == 2 { v.tanh() } else { sigmoid(*v) };
                    }
                    let cp = &cs[cs.len() - 1];
                    let c: Vec<F> = (0..h).map(|j| a[h + j] * cp[j] + a[j] * a[2 * h + j]).collect();
                    let out = (0..h).map(|j| a[3 * h + j] * c[j].tanh()).collect();
                    cs.push(c);
                    out
                }
                CellKind::Gru => {
                    gemv_acc(&u[..2 * h * h], h, hp, &mut a[..2 * h]);
                    for v in &mut a[..2 * h] {
                        *v = sigmoid(*v);
                    }
                    let rh: Vec<F> = (0..h).map(|j| a[h + j] * hp[j]).collect();
                    gemv_acc(&u[2 * h * h..], h, &rh, &mut a[2 * h..]);
                    for v in &mut a[2 * h..] {
                        *v = v.tanh();
                    }
                    (0..h).map(|j| (F::one() - a[j]) * hp[j] + a[j] * a[2 * h + j]).collect()
                }
            };
            acts.push(a);
            hs.push(next);
        }
        RunCache { order: order.to_vec(), hs, cs, acts }
    }

    /// Backpropagates `dh[t]` (gradient on the output of step `t`) through
    /// the run, accumulating parameter gradients and adding input gradients
    /// into the rows of `dx`.
    pub fn backward<F: Scalar>(
        &self,
        v: Values<'_, F>,
        g: &mut Grads<'_, F>,
        x: &Tensor<F>,
        cache: &RunCache<F>,
        dh: &[Vec<F>],
        dx: &mut Tensor<F>,
    ) {
        let h = self.hidden;
        let rows = self.kind.blocks() * h;
        let (w, u) = (v[self.w].as_slice(), v[self.u].as_slice());
        let mut dh_rec = vec![F::zero(); h];
        let mut dc_rec = vec![F::zero(); h];
        let mut da = vec![F::zero(); rows];
        for t in (0..cache.order.len()).rev() {
            let xt = x.row(cache.order[t]);
            let hp = &cache.hs[t];
            let a = &cache.acts[t];
            let dht: Vec<F> = (0..h).map(|j| dh[t][j] + dh_rec[j]).collect();
            let mut dhp = vec![F::zero(); h];
            match self.kind {
                CellKind::Vanilla => {
                    for j in 0..h {
                        da[j] = dht[j] * (F::one() - a[j] * a[j]);
                    }
                    outer_acc(g[self.u].as_mut_slice(), &da, hp);
                    gemv_t_acc(u, h, &da, &mut dhp);
                }
                CellKind::Lstm => {
                    let (c, cp) = (&cache.cs[t + 1], &cache.cs[t]);
                    for j in 0..h {
                        let (i, f, gg, o) = (a[j], a[h + j], a[2 * h + j], a[3 * h + j]);
                        let tc = c[j].tanh();
                        let dc = dc_rec[j] + dht[j] * o * (F::one() - tc * tc);
                        da[j] = dc * gg * i * (F::one() - i);
                        da[h + j] = dc * cp[j] * f * (F::one() - f);
                        da[2 * h + j] = dc * i * (F::one() - gg * gg);
                        da[3 * h + j] = dht[j] * tc * o * (F::one() - o);
                        dc_rec[j] = dc * f;
                    }
                    outer_acc(g[self.u].as_mut_slice(), &da, hp);
                    gemv_t_acc(u, h, &da, &mut dhp);
                }
                CellKind::Gru => {
                    for j in 0..h {
                        let (z, n) = (a[j], a[2 * h + j]);
                        da[j] = dht[j] * (n - hp[j]) * z * (F::one() - z);
                        da[2 * h + j] = dht[j] * z * (F::one() - n * n);
                        dhp[j] = dht[j] * (F::one() - z);
                    }
                    let rh: Vec<F> = (0..h).map(|j| a[h + j] * hp[j]).collect();
                    let mut drh = vec![F::zero(); h];
                    gemv_t_acc(&u[2 * h * h..], h, &da[2 * h..], &mut drh);
                    for j in 0..h {
                        let r = a[h + j];
                        da[h + j] = drh[j] * hp[j] * r * (F::one() - r);
                        dhp[j] += drh[j] * r;
                    }
                    let du = g[self.u].as_mut_slice();
                    outer_acc(&mut du[..2 * h * h], &da[..2 * h], hp);
                    outer_acc(&mut du[2 * h * h..], &da[2 * h..], &rh);
                    gemv_t_acc(&u[..2 * h * h], h, &da[..2 * h], &mut dhp);
                }
            }
            outer_acc(g[self.w].as_mut_slice(), &da, xt);
            for (db, d) in g[self.b].as_mut_slice().iter_mut().zip(&da) {
                *db += *d;
            }
            gemv_t_acc(w, self.input, &da, dx.row_mut(cache.order[t]));
            dh_rec = dhp;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_rng;

    fn cell(kind: CellKind, input: usize, hidden: usize) -> (ParamStore<f64>, Cell) {
        let mut s = ParamStore::new();
        let c = Cell::register(&mut s, "c", kind, input, hidden, &mut derive_rng(1, "cell")).unwrap();
        (s, c)
    }

    #[test]
    fn zero_parameters_give_zero_states() {
        for kind in [CellKind::Vanilla, CellKind::Gru, CellKind::Lstm] {
            let (mut s, c) = cell(kind, 3, 2);
            for id in s.ids().collect::<Vec<_>>() {
                s.value_mut(id).fill(0.0);
            }
            let x = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 0.5, 3.0, 1.0, 1.0]).unwrap();
            let run = c.forward(s.values(), &x, &[0, 1]);
            assert!(run.hs.iter().flatten().all(|v| *v == 0.0), "{kind:?}");
        }
    }

    #[test]
    fn vanilla_hand_recurrence() {
        let (mut s, c) = cell(CellKind::Vanilla, 2, 2);
        let (w, u, b) = (s.id("c.W").unwrap(), s.id("c.U").unwrap(), s.id("c.b").unwrap());
        s.set_value(w, Tensor::from_vec(&[2, 2], vec![0.5, -0.3, 0.2, 0.8]).unwrap()).unwrap();
        s.set_value(u, Tensor::from_vec(&[2, 2], vec![0.1, 0.4, -0.6, 0.3]).unwrap()).unwrap();
        s.set_value(b, Tensor::from_vec(&[2], vec![0.05, -0.05]).unwrap()).unwrap();
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let run = c.forward(s.values(), &x, &[0, 1]);
        let h1 = [(0.5 - 0.6 + 0.05f64).tanh(), (0.2 + 1.6 - 0.05f64).tanh()];
        let h2 = [
            (-0.5 - 0.15 + 0.1 * h1[0] + 0.4 * h1[1] + 0.05).tanh(),
            (-0.2 + 0.4 - 0.6 * h1[0] + 0.3 * h1[1] - 0.05).tanh(),
        ];
        for j in 0..2 {
            assert!((run.hs[1][j] - h1[j]).abs() < 1e-12);
            assert!((run.last()[j] - h2[j]).abs() < 1e-12);
        }
    }
}
