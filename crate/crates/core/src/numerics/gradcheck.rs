use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ParamStore, Tensor};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a - n| / max(|a|, |n|, 1e-8)` over all checked entries.
    pub max_rel_error: f64,
    pub worst_param: Option<String>,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    /// Entries whose `±eps` evaluations landed on a different piece of a
    /// piecewise-smooth loss (e.g. a max-pool argmax changed); central
    /// differences are meaningless there, so they are counted, not compared.
    pub kinks: usize,
}

/// Compares analytic gradients with central differences for every scalar
/// parameter.
///
/// `loss` must compute the loss for the current values and accumulate its
/// gradients into the store; it is called with zeroed gradients each time.
pub fn finite_diff_check<L>(store: &mut ParamStore<f64>, eps: f64, mut loss: L) -> Result<GradCheckReport>
where
    L: FnMut(&mut ParamStore<f64>) -> Result<f64>,
{
    finite_diff_check_piecewise(store, eps, |s| Ok((loss(s)?, Vec::new())))
}

/// [`finite_diff_check`] for losses with non-differentiable points. `loss`
/// also returns a signature of the active piece (such as the chosen argmax
/// positions); an entry is skipped when either perturbed evaluation has a
/// signature different from the unperturbed one.
pub fn finite_diff_check_piecewise<L>(store: &mut ParamStore<f64>, eps: f64, mut loss: L) -> Result<GradCheckReport>
where
    L: FnMut(&mut ParamStore<f64>) -> Result<(f64, Vec<usize>)>,
{
    store.zero_grads();
    let (_, base) = loss(store)?;
    let analytic: Vec<Tensor<f64>> = store.ids().map(|id| store.grad(id).clone()).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: None,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        kinks: 0,
    };
    let ids: Vec<_> = store.ids().collect();
    for (id, grad) in ids.into_iter().zip(&analytic) {
        for j in 0..grad.len() {
            let orig = store.value(id).as_slice()[j];
            store.value_mut(id).as_mut_slice()[j] = orig + eps;
            store.zero_grads();
            let (plus, sig_plus) = loss(store)?;
            store.value_mut(id).as_mut_slice()[j] = orig - eps;
            store.zero_grads();
            let (minus, sig_minus) = loss(store)?;
            store.value_mut(id).as_mut_slice()[j] = orig;
            if sig_plus != base || sig_minus != base {
                report.kinks += 1;
                continue;
            }

            let a = grad.as_slice()[j];
            let n = (plus - minus) / (2.0 * eps);
            let denom = a.abs().max(n.abs()).max(1e-8);
            let rel = (a - n).abs() / denom;
            report.checked += 1;
            if rel > report.max_rel_error || report.worst_param.is_none() {
                report.max_rel_error = rel;
                report.worst_param = Some(store.name(id).to_string());
                report.worst_index = j;
                report.analytic = a;
                report.numeric = n;
            }
        }
    }
    store.zero_grads();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quadratic_store() -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("w", Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap()).unwrap();
        s
    }

    #[test]
    fn correct_gradient_passes() {
        let mut s = quadratic_store();
        let id = s.id("w").unwrap();
        let r = finite_diff_check(&mut s, 1e-3, |s| {
            let v = s.value(id).clone();
            let mut l = 0.0;
            for (j, x) in v.as_slice().iter().enumerate() {
                l += x * x * x;
                s.grad_mut(id).as_mut_slice()[j] += 3.0 * x * x;
            }
            Ok(l)
        })
        .unwrap();
        assert_eq!(r.checked, 3);
        assert!(r.max_rel_error < 1e-5, "{r:?}");
        assert_eq!(s.value(id).as_slice(), [0.5, -1.0, 2.0]);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let mut s = quadratic_store();
        let id = s.id("w").unwrap();
        let r = finite_diff_check(&mut s, 1e-3, |s| {
            let v = s.value(id).clone();
            s.grad_mut(id).as_mut_slice()[1] += 1.0;
            Ok(v.as_slice().iter().map(|x| x * x).sum())
        })
        .unwrap();
        assert!(r.max_rel_error > 0.1);
        assert_eq!(r.worst_param.as_deref(), Some("w"));
    }

    #[test]
    fn kinks_are_skipped() {
        // |w| has a kink at 0; w[0] = 1e-4 sits within eps of it
        let mut s = ParamStore::new();
        let id = s.add("w", Tensor::from_vec(&[2], vec![1e-4, 0.7]).unwrap()).unwrap();
        let r = finite_diff_check_piecewise(&mut s, 1e-3, |s| {
            let v = s.value(id).as_slice().to_vec();
            let mut sig = Vec::new();
            for (j, x) in v.iter().enumerate() {
                s.grad_mut(id).as_mut_slice()[j] += x.signum();
                sig.push(usize::from(*x > 0.0));
            }
            Ok((v.iter().map(|x| x.abs()).sum(), sig))
        })
        .unwrap();
        assert_eq!((r.checked, r.kinks), (1, 1));
        assert!(r.max_rel_error < 1e-9);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let mut s = quadratic_store();
        let r = finite_diff_check(&mut s, 1e-3, |_| Ok(4.2)).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
        assert_eq!((r.analytic, r.numeric), (0.0, 0.0));
    }
}
