use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use num_traits::Float;
use rand::Rng;

use crate::{Error, Result};

/// Proposal distribution over label ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleDistribution {
    /// Zipfian: `P(r) = (ln(r+2) - ln(r+1)) / ln(N+1)`; suits frequency-ranked ids.
    #[default]
    LogUniform,
    Uniform,
}

impl SampleDistribution {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleDistribution::LogUniform => "log_uniform",
            SampleDistribution::Uniform => "uniform",
        }
    }
}

impl FromStr for SampleDistribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log_uniform" => Ok(SampleDistribution::LogUniform),
            "uniform" => Ok(SampleDistribution::Uniform),
            _ => Err(Error::InvalidConfig(alloc::format!("unknown sampler distribution {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub num_sampled: usize,
    pub distribution: SampleDistribution,
    pub remove_accidental_hits: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { num_sampled: 1000, distribution: SampleDistribution::LogUniform, remove_accidental_hits: true }
    }
}

/// Negative labels drawn without replacement, plus how many raw draws it took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledCandidates {
    pub labels: Vec<usize>,
    pub num_tries: usize,
}

/// Draws label ids in `0..num_labels`.
#[derive(Debug, Clone)]
pub struct CandidateSampler {
    num_labels: usize,
    distribution: SampleDistribution,
    log_range: f64,
}

impl CandidateSampler {
    pub fn new(num_labels: usize, distribution: SampleDistribution) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::EmptyInput("label set"));
        }
        Ok(CandidateSampler { num_labels, distribution, log_range: Float::ln(num_labels as f64 + 1.0) })
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn distribution(&self) -> SampleDistribution {
        self.distribution
    }

    /// Probability of drawing `label` in one raw draw.
    pub fn probability(&self, label: usize) -> f64 {
        if label >= self.num_labels {
            return 0.0;
        }
        match self.distribution {
            SampleDistribution::Uniform => 1.0 / self.num_labels as f64,
            SampleDistribution::LogUniform => Float::ln_1p(1.0 / (label as f64 + 1.0)) / self.log_range,
        }
    }

    /// Expected number of times `label` appears in `num_tries` raw draws,
    /// in the form used to correct logits for unique sampling.
    pub fn expected_count(&self, label: usize, num_tries: usize) -> f64 {
        let p = self.probability(label);
        if p >= 1.0 {
            return 1.0;
        }
        -Float::exp_m1(num_tries as f64 * Float::ln_1p(-p))
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.distribution {
            SampleDistribution::Uniform => rng.gen_range(0..self.num_labels),
            SampleDistribution::LogUniform => {
                let u: f64 = rng.gen();
                let r = Float::floor(Float::exp(u * self.log_range)) as usize;
                r.saturating_sub(1).min(self.num_labels - 1)
            }
        }
    }

    /// Draws `cfg.num_sampled` distinct labels, skipping `true_labels` when
    /// accidental-hit removal is on.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        true_labels: &[usize],
        cfg: &SamplerConfig,
        rng: &mut R,
    ) -> Result<SampledCandidates> {
        let mut blocked = vec![false; self.num_labels];
        let mut available = self.num_labels;
        if cfg.remove_accidental_hits {
            for &t in true_labels {
                if t < self.num_labels && !blocked[t] {
                    blocked[t] = true;
                    available -= 1;
                }
            }
        }
        if cfg.num_sampled > available {
            return Err(Error::SamplerExhausted { requested: cfg.num_sampled, available });
        }
        let mut labels = Vec::with_capacity(cfg.num_sampled);
        let mut num_tries = 0usize;
        // Bound on raw draws; rare tail labels can make rejection sampling
        // arbitrarily slow when nearly the whole label set is requested.
        let budget = 64usize.saturating_mul(self.num_labels).saturating_add(1 << 20);
        while labels.len() < cfg.num_sampled && num_tries < budget {
            let r = self.draw(rng);
            num_tries += 1;
            if !blocked[r] {
                blocked[r] = true;
                labels.push(r);
            }
        }
        // Budget exhausted: fill deterministically from the most probable ids.
        let mut next = 0;
        while labels.len() < cfg.num_sampled {
            if !blocked[next] {
                blocked[next] = true;
                labels.push(next);
            }
            next += 1;
        }
        Ok(SampledCandidates { labels, num_tries })
    }
}
