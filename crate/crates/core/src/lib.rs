//! Context-aware semantic expansion.
//!
//! Given a seed term sitting in a sentence with a placeholder, rank the other
//! terms that fit the same slot. This crate holds the algorithmic core:
//!
//! * [`corpus`] mines Hearst-pattern lists from lemmatized sentences and turns
//!   them into `⟨context, term set⟩` records, then filters, splits and indexes
//!   them.
//! * [`numerics`] is a small dense substrate: tensors, a parameter store,
//!   Adam, a candidate sampler, the multi-label sampled softmax loss and a
//!   finite-difference gradient checker.
//! * [`embeddings`] trains CBOW IN/OUT vectors with negative sampling.
//! * [`encoders`] holds the context encoders, the seed encoder and the
//!   attention poolers, all with hand-written backward passes.
//! * [`model`] assembles the expansion network, trains it and ranks terms.
//! * [`baselines`] implements the lexical-substitution scorers.
//! * [`eval`] computes ranking metrics and macro-averaged reports.
//! * [`synth`] generates planted synthetic corpora for experiments.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! file system lives in the `case-workbench` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod corpus;
pub mod embeddings;
pub mod encoders;
mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod synth;

pub use error::{Error, Result};

/// Derives an independent RNG stream from a root seed and a component label.
///
/// All randomness in a run flows from one root seed; each component asks for
/// its own stream by name so adding a component never shifts another's draws.
pub fn derive_rng(root_seed: u64, label: &str) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    // FNV-1a over the label, mixed with the root seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    rand_chacha::ChaCha8Rng::seed_from_u64(root_seed ^ h.rotate_left(17))
}
