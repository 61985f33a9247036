use alloc::vec::Vec;

use super::Scalar;
use crate::{Error, Result};

pub fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `ln Σ exp(v_i)`, computed with max subtraction.
pub fn log_sum_exp<F: Scalar>(v: &[F]) -> Result<F> {
    let max = v.iter().copied().fold(F::neg_infinity(), F::max);
    if v.is_empty() {
        return Err(Error::EmptyInput("log-sum-exp of an empty vector"));
    }
    let s: F = v.iter().map(|x| (*x - max).exp()).sum();
    Ok(max + s.ln())
}

/// Numerically stable softmax.
pub fn softmax<F: Scalar>(v: &[F]) -> Result<Vec<F>> {
    if v.is_empty() {
        return Err(Error::EmptyInput("softmax of an empty vector"));
    }
    let max = v.iter().copied().fold(F::neg_infinity(), F::max);
    let mut out: Vec<F> = v.iter().map(|x| (*x - max).exp()).collect();
    let s: F = out.iter().copied().sum();
    out.iter_mut().for_each(|x| *x /= s);
    Ok(out)
}

/// Softmax over the positions where `mask` is true; masked positions get an
/// exact zero.
pub fn masked_softmax<F: Scalar>(v: &[F], mask: &[bool]) -> Result<Vec<F>> {
    if v.len() != mask.len() {
        return Err(Error::ShapeMismatch { expected: alloc::vec![v.len()], actual: alloc::vec![mask.len()] });
    }
    let max = v
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(x, _)| *x)
        .fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return Err(Error::EmptyInput("every position is masked"));
    }
    let mut out: Vec<F> = v
        .iter()
        .zip(mask)
        .map(|(x, m)| if *m { (*x - max).exp() } else { F::zero() })
        .collect();
    let s: F = out.iter().copied().sum();
    out.iter_mut().for_each(|x| *x /= s);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_zeros() {
        assert_eq!(softmax(&[0.0f64, 0.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn one_two_three() {
        // exp(k) / (e + e² + e³), evaluated at high precision.
        let p = softmax(&[1.0f64, 2.0, 3.0]).unwrap();
        for (a, b) in p.iter().zip([0.090_030_573_170_380_46, 0.244_728_471_054_797_64, 0.665_240_955_774_821_9]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert!(softmax::<f32>(&[]).is_err());
        assert!(log_sum_exp::<f32>(&[]).is_err());
        assert!(masked_softmax(&[1.0f32], &[false]).is_err());
    }

    #[test]
    fn masked_positions_are_exact_zero() {
        let p = masked_softmax(&[3.0f64, 100.0, 1.0], &[true, false, true]).unwrap();
        assert_eq!(p[1], 0.0);
        assert!((p[0] + p[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_logits_are_stable() {
        let p = softmax(&[1000.0f32, 1000.0]).unwrap();
        assert_eq!(p, [0.5, 0.5]);
        assert!((log_sum_exp(&[1000.0f64, 1000.0]).unwrap() - (1000.0 + 2f64.ln())).abs() < 1e-9);
        assert!(sigmoid(-1000.0f64) >= 0.0 && sigmoid(1000.0f64) <= 1.0);
    }

    proptest! {
        #[test]
        fn sums_to_one_and_shift_invariant(v in proptest::collection::vec(-30.0f64..30.0, 1..20), c in -50.0f64..50.0) {
            let p = softmax(&v).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            prop_assert!(p.iter().all(|x| *x > 0.0));
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
