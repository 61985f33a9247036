//! Paired significance test over per-sample metric vectors.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::{Error, Result};

/// Samples at or above this size use the normal approximation.
pub const NORMAL_APPROX_MIN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    pub n: usize,
    pub mean_diff: f64,
}

/// Paired t-test on `a - b`.
///
/// Zero variance of the differences gives `t = 0, p = 1` when the mean
/// difference is zero and `t = ±inf, p = 0` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Experiment(format!("paired vectors differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Experiment("a paired t-test needs at least two samples".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTest { t: 0.0, p: 1.0, n, mean_diff: 0.0 }
        } else {
            TTest { t: f64::INFINITY.copysign(mean), p: 0.0, n, mean_diff: mean }
        });
    }
    let t = mean / (var / n as f64).sqrt();
    let tail = if n >= NORMAL_APPROX_MIN {
        Normal::standard().sf(t.abs())
    } else {
        StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom").sf(t.abs())
    };
    Ok(TTest { t, p: (2.0 * tail).min(1.0), n, mean_diff: mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors() {
        let a = [0.1, 0.5, 0.9];
        assert_eq!(paired_t_test(&a, &a).unwrap(), TTest { t: 0.0, p: 1.0, n: 3, mean_diff: 0.0 });
    }

    #[test]
    fn constant_shift() {
        let b: Vec<f64> = (0..100).map(|i| i as f64 / 128.0).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 1.0).collect();
        let r = paired_t_test(&a, &b).unwrap();
        assert_eq!(r.p, 0.0);
        assert_eq!(r.t, f64::INFINITY);
    }

    #[test]
    fn small_sample_uses_t_distribution() {
        // d = [1, 2, 3, 4]: mean 2.5, sd sqrt(5/3), t = 2.5 / sqrt(5/12)
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert!((r.t - 2.5 / (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        // two-sided p for t = 3.873 with 3 df
        assert!((r.p - 0.030_466).abs() < 1e-5, "{}", r.p);
    }

    #[test]
    fn errors() {
        assert!(paired_t_test(&[1.0], &[1.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
    }
}
