use alloc::vec::Vec;

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Train/test sizes for `n` records: the test side gets `ceil(fraction * n)`.
///
/// Rounding up reproduces the 1,478,173 / 369,544 split of a 1,847,717
/// sentence corpus at a 20% test fraction.
pub fn split_sizes(n: usize, test_fraction: f64) -> (usize, usize) {
    let test = Float::ceil((test_fraction * n as f64) - 1e-9).max(0.0) as usize;
    let test = test.min(n);
    (n - test, test)
}

/// Uniformly samples a test split. Both sides keep the input order, and the
/// result depends only on the input order and `seed`.
pub fn split<T: Clone>(records: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (_, n_test) = split_sizes(records.len(), test_fraction);
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = alloc::vec![false; records.len()];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let mut train = Vec::with_capacity(records.len() - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (rec, t) in records.iter().zip(is_test) {
        if t { test.push(rec.clone()) } else { train.push(rec.clone()) }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_records() {
        let data: Vec<u32> = (0..10).collect();
        let (train, test) = split(&data, 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all: Vec<u32> = train.iter().chain(&test).copied().collect();
        all.sort();
        assert_eq!(all, data);
    }

    #[test]
    fn deterministic() {
        let data: Vec<u32> = (0..1000).collect();
        assert_eq!(split(&data, 0.2, 3).unwrap(), split(&data, 0.2, 3).unwrap());
        assert_ne!(split(&data, 0.2, 3).unwrap(), split(&data, 0.2, 4).unwrap());
    }

    #[test]
    fn reference_corpus_sizes() {
        assert_eq!(split_sizes(1_847_717, 0.2), (1_478_173, 369_544));
        assert_eq!(split_sizes(10, 0.2), (8, 2));
        assert_eq!(split_sizes(5, 0.2), (4, 1));
    }

    #[test]
    fn errors() {
        assert_eq!(split::<u8>(&[], 0.2, 1), Err(Error::EmptyCorpus));
        assert!(split(&[1, 2], 0.0, 1).is_err());
        assert!(split(&[1, 2], 1.0, 1).is_err());
    }
}
