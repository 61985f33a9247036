use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::linalg::{axpy, dot};
use super::sampler::{CandidateSampler, SampledCandidates};
use super::{log_sum_exp, Scalar, Tensor};
use crate::{Error, Result};

/// Labels whose logits enter the reduced softmax, with the log expected
/// count subtracted from each logit.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet<F> {
    pub labels: Vec<usize>,
    pub log_expected: Vec<F>,
}

impl<F: Scalar> CandidateSet<F> {
    /// Every label, no correction: the loss is the full softmax.
    pub fn full(num_labels: usize) -> Self {
        CandidateSet { labels: (0..num_labels).collect(), log_expected: alloc::vec![F::zero(); num_labels] }
    }

    /// The batch's true labels followed by the sampled negatives.
    pub fn from_sample(true_union: &[usize], sampled: &SampledCandidates, sampler: &CandidateSampler) -> Result<Self> {
        if sampled.labels.is_empty() {
            return Err(Error::EmptyInput("sampled set"));
        }
        let labels: Vec<usize> = true_union.iter().chain(&sampled.labels).copied().collect();
        let log_expected = labels
            .iter()
            .map(|&l| F::lit(sampler.expected_count(l, sampled.num_tries)).ln())
            .collect();
        Ok(CandidateSet { labels, log_expected })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Loss value and gradients; weight and bias gradients are indexed like the
/// candidate list, not like the label set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLoss<F> {
    pub loss: F,
    pub per_sample: Vec<F>,
    pub d_inputs: Tensor<F>,
    pub d_weights: Tensor<F>,
    pub d_bias: Vec<F>,
}

/// Multi-label softmax cross-entropy over a candidate subset.
///
/// `inputs` is `B x w`, `weights` is `|L| x w`, `bias` has `|L|` entries.
/// Each sample's loss is the mean cross-entropy of its true labels against
/// the corrected softmax over `candidates`; the batch loss is the mean over
/// samples. A true label is matched to its first occurrence in the list.
pub fn sampled_softmax_loss<F: Scalar>(
    inputs: &Tensor<F>,
    weights: &Tensor<F>,
    bias: &Tensor<F>,
    targets: &[Vec<usize>],
    candidates: &CandidateSet<F>,
) -> Result<SampledLoss<F>> {
    let b = inputs.rows();
    let w = inputs.cols();
    if b == 0 {
        return Err(Error::EmptyInput("batch"));
    }
    if targets.len() != b {
        return Err(Error::ShapeMismatch { expected: alloc::vec![b], actual: alloc::vec![targets.len()] });
    }
    if weights.cols() != w || bias.len() != weights.rows() {
        return Err(Error::ShapeMismatch { expected: alloc::vec![weights.rows(), w], actual: weights.shape().into() });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate set"));
    }
    if candidates.log_expected.len() != candidates.len() {
        return Err(Error::ShapeMismatch {
            expected: alloc::vec![candidates.len()],
            actual: alloc::vec![candidates.log_expected.len()],
        });
    }
    if let Some(&l) = candidates.labels.iter().find(|l| **l >= weights.rows()) {
        return Err(Error::InvalidArgument(alloc::format!("candidate label {l} outside the head")));
    }

    let mut position = BTreeMap::new();
    for (k, &l) in candidates.labels.iter().enumerate() {
        position.entry(l).or_insert(k);
    }
    let c = candidates.len();
    let inv_b = F::one() / F::lit(b as f64);
    let mut per_sample = Vec::with_capacity(b);
    let mut d_inputs = Tensor::zeros(&[b, w]);
    let mut d_weights = Tensor::zeros(&[c, w]);
    let mut d_bias = alloc::vec![F::zero(); c];
    let mut logits = alloc::vec![F::zero(); c];
    let mut pos = Vec::new();

    for (i, ts) in targets.iter().enumerate() {
        if ts.is_empty() {
            return Err(Error::EmptyInput("true labels of a sample"));
        }
        pos.clear();
        for t in ts {
            let k = *position
                .get(t)
                .ok_or_else(|| Error::InvalidArgument(alloc::format!("true label {t} missing from candidates")))?;
            pos.push(k);
        }
        let x = inputs.row(i);
        for (k, z) in logits.iter_mut().enumerate() {
            let l = candidates.labels[k];
            *z = dot(weights.row(l), x) + bias.as_slice()[l] - candidates.log_expected[k];
        }
        let lse = log_sum_exp(&logits)?;
        let inv_t = F::one() / F::lit(pos.len() as f64);
        let mean_true = pos.iter().map(|&k| logits[k]).sum::<F>() * inv_t;
        per_sample.push(lse - mean_true);

        // dz = softmax - target distribution, scaled by 1/B
        for z in logits.iter_mut() {
            *z = (*z - lse).exp() * inv_b;
        }
        for &k in &pos {
            logits[k] -= inv_t * inv_b;
        }
        let dx = d_inputs.row_mut(i);
        for (k, &dz) in logits.iter().enumerate() {
            axpy(dz, weights.row(candidates.labels[k]), dx);
            axpy(dz, x, d_weights.row_mut(k));
            d_bias[k] += dz;
        }
    }
    let loss = per_sample.iter().copied().sum::<F>() * inv_b;
    Ok(SampledLoss { loss, per_sample, d_inputs, d_weights, d_bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derive_rng;
    use crate::numerics::{SampleDistribution, SamplerConfig};
    use alloc::vec;
    use rand::Rng;

    /// Dense multi-label cross-entropy written directly from the definition.
    fn dense_oracle(x: &[Vec<f64>], w: &[Vec<f64>], b: &[f64], targets: &[Vec<usize>]) -> f64 {
        let mut total = 0.0;
        for (xi, ti) in x.iter().zip(targets) {
            let z: Vec<f64> = w.iter().zip(b).map(|(wr, br)| wr.iter().zip(xi).map(|(a, c)| a * c).sum::<f64>() + br).collect();
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = z.iter().map(|v| (v - m).exp()).sum();
            let ce: f64 = ti.iter().map(|&t| -((z[t] - m).exp() / denom).ln()).sum::<f64>() / ti.len() as f64;
            total += ce;
        }
        total / x.len() as f64
    }

    fn random_instance(seed: u64) -> (Tensor<f64>, Tensor<f64>, Tensor<f64>, Vec<Vec<usize>>) {
        let mut rng = derive_rng(seed, "inst");
        let (bsz, l, d) = (rng.gen_range(1..5), rng.gen_range(2..12), rng.gen_range(1..6));
        let mut gen = |n: usize| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        let x = Tensor::from_vec(&[bsz, d], gen(bsz * d)).unwrap();
        let w = Tensor::from_vec(&[l, d], gen(l * d)).unwrap();
        let b = Tensor::from_vec(&[l], gen(l)).unwrap();
        let mut rng = derive_rng(seed, "targets");
        let targets = (0..bsz)
            .map(|_| {
                let mut t: Vec<usize> = (0..l).filter(|_| rng.gen_bool(0.3)).collect();
                if t.is_empty() {
                    t.push(rng.gen_range(0..l));
                }
                t
            })
            .collect();
        (x, w, b, targets)
    }

    #[test]
    fn full_candidates_match_dense_oracle() {
        for seed in 0..100 {
            let (x, w, b, t) = random_instance(seed);
            let got = sampled_softmax_loss(&x, &w, &b, &t, &CandidateSet::full(w.rows())).unwrap().loss;
            let rows = |m: &Tensor<f64>| (0..m.rows()).map(|r| m.row(r).to_vec()).collect::<Vec<_>>();
            let want = dense_oracle(&rows(&x), &rows(&w), b.as_slice(), &t);
            assert!((got - want).abs() < 1e-9, "seed {seed}: {got} vs {want}");
        }
    }

    #[test]
    fn constant_correction_cancels() {
        let (x, w, b, t) = random_instance(5);
        let full = CandidateSet::full(w.rows());
        let mut shifted = full.clone();
        shifted.log_expected.iter_mut().for_each(|v| *v = 3.7);
        let a = sampled_softmax_loss(&x, &w, &b, &t, &full).unwrap();
        let c = sampled_softmax_loss(&x, &w, &b, &t, &shifted).unwrap();
        assert!((a.loss - c.loss).abs() < 1e-12);
    }

    #[test]
    fn two_way_softmax() {
        let x = Tensor::from_vec(&[1, 1], vec![1.0]).unwrap();
        let b = Tensor::zeros(&[2]);
        for (a, c) in [(0.5f64, 0.5f64), (2.0, -1.0), (-3.0, 1.0)] {
            let w = Tensor::from_vec(&[2, 1], vec![a, c]).unwrap();
            let cand = CandidateSet { labels: vec![0, 1], log_expected: vec![0.25, 0.25] };
            let got = sampled_softmax_loss(&x, &w, &b, &[vec![0]], &cand).unwrap().loss;
            let want: f64 = (1.0 + (c - a).exp()).ln();
            assert!((got - want).abs() < 1e-12);
            if a == c {
                assert!((got - core::f64::consts::LN_2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (x, w, b, t) = random_instance(9);
        let cand = CandidateSet { labels: (0..w.rows()).rev().collect(), log_expected: (0..w.rows()).map(|i| i as f64 * 0.1).collect() };
        let out = sampled_softmax_loss(&x, &w, &b, &t, &cand).unwrap();
        let f = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| sampled_softmax_loss(x, w, b, &t, &cand).unwrap().loss;
        let h = 1e-5;
        for i in 0..x.len() {
            let (mut p, mut m) = (x.clone(), x.clone());
            p.as_mut_slice()[i] += h;
            m.as_mut_slice()[i] -= h;
            let n = (f(&p, &w, &b) - f(&m, &w, &b)) / (2.0 * h);
            assert!((n - out.d_inputs.as_slice()[i]).abs() < 1e-7);
        }
        let d = w.cols();
        for i in 0..w.len() {
            let (mut p, mut m) = (w.clone(), w.clone());
            p.as_mut_slice()[i] += h;
            m.as_mut_slice()[i] -= h;
            let n = (f(&x, &p, &b) - f(&x, &m, &b)) / (2.0 * h);
            let k = cand.labels.iter().position(|l| *l == i / d).unwrap();
            assert!((n - out.d_weights.row(k)[i % d]).abs() < 1e-7);
        }
        for i in 0..b.len() {
            let (mut p, mut m) = (b.clone(), b.clone());
            p.as_mut_slice()[i] += h;
            m.as_mut_slice()[i] -= h;
            let n = (f(&x, &w, &p) - f(&x, &w, &m)) / (2.0 * h);
            let k = cand.labels.iter().position(|l| *l == i).unwrap();
            assert!((n - out.d_bias[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn sampled_candidates_are_corrected() {
        let sampler = CandidateSampler::new(50, SampleDistribution::LogUniform).unwrap();
        let cfg = SamplerConfig { num_sampled: 10, ..Default::default() };
        let s = sampler.sample(&[3, 7], &cfg, &mut derive_rng(2, "c")).unwrap();
        let cand: CandidateSet<f64> = CandidateSet::from_sample(&[3, 7], &s, &sampler).unwrap();
        assert_eq!(cand.len(), 12);
        assert_eq!(&cand.labels[..2], &[3, 7]);
        assert!((cand.log_expected[0] - sampler.expected_count(3, s.num_tries).ln()).abs() < 1e-12);
        let empty = SampledCandidates { labels: vec![], num_tries: 0 };
        assert!(CandidateSet::<f64>::from_sample(&[3], &empty, &sampler).is_err());
    }

    #[test]
    fn missing_true_label_errors() {
        let (x, w, b, _) = random_instance(1);
        let cand = CandidateSet { labels: vec![0], log_expected: vec![0.0] };
        let t = vec![vec![1]; x.rows()];
        assert!(sampled_softmax_loss(&x, &w, &b, &t, &cand).is_err());
    }
}
