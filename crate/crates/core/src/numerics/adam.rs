use super::{ParamStore, Scalar};
use crate::{Error, Result};

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update over every parameter, then zeroes the
/// gradients. A non-finite gradient aborts before anything is modified.
pub fn adam_step<F: Scalar>(store: &mut ParamStore<F>, cfg: &AdamConfig) -> Result<()> {
    let (values, grads, states) = store.parts_mut();
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Divergence(alloc::format!("non-finite gradient in parameter #{i}")));
    }
    let (b1, b2) = (F::lit(cfg.beta1), F::lit(cfg.beta2));
    let (one_b1, one_b2) = (F::one() - b1, F::one() - b2);
    let eps = F::lit(cfg.eps);
    for ((value, grad), state) in values.iter_mut().zip(grads.iter_mut()).zip(states.iter_mut()) {
        state.step += 1;
        let t = state.step as i32;
        let c1 = F::one() - b1.powi(t);
        let c2 = F::one() - b2.powi(t);
        let step = F::lit(cfg.lr) / c1;
        let m = state.m.as_mut_slice();
        let v = state.v.as_mut_slice();
        for (((x, g), mi), vi) in value.as_mut_slice().iter_mut().zip(grad.as_mut_slice()).zip(m).zip(v) {
            *mi = b1 * *mi + one_b1 * *g;
            *vi = b2 * *vi + one_b2 * *g * *g;
            *x -= step * *mi / ((*vi / c2).sqrt() + eps);
            *g = F::zero();
        }
    }
    Ok(())
}
