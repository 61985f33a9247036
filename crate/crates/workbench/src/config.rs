//! Run configuration: `key = value` files layered over defaults, then
//! command-line overrides.

use std::path::Path;
use std::str::FromStr;

use case_core::baselines::{BaselineConfig, PicConfig};
use case_core::corpus::FilterConfig;
use case_core::embeddings::CbowConfig;
use case_core::encoders::{AttentionKind, EncoderKind, HyperParams};
use case_core::model::{ModelConfig, TrainConfig};
use case_core::numerics::{AdamConfig, SampleDistribution, SamplerConfig};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Every tunable of a run. Field names double as config keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub deterministic: bool,
    pub test_fraction: f64,
    // corpus filter
    pub min_precision: f64,
    pub min_hyponyms: usize,
    pub min_term_sentences: usize,
    pub min_quality_terms: usize,
    // CBOW pretraining
    pub cbow_window: usize,
    pub cbow_negatives: usize,
    pub cbow_epochs: usize,
    pub cbow_subsample: f64,
    pub cbow_lr: f64,
    // model
    pub encoder: EncoderKind,
    pub attention: AttentionKind,
    pub dim: usize,
    pub attn_dim: usize,
    pub max_len: usize,
    pub pos_dim: usize,
    pub cnn_window: usize,
    pub cnn_filters: usize,
    pub min_freq: usize,
    pub init_scale: f64,
    // training
    pub batch_size: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub sampler: SampleDistribution,
    pub full_softmax: bool,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub strip_hypernyms: bool,
    // baselines
    pub lambda1: f64,
    pub lambda2: f64,
    pub pic_epochs: usize,
    pub pic_batch_size: usize,
    pub pic_negatives: usize,
    pub pic_lr: f64,
    // evaluation
    pub cutoffs: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let filter = FilterConfig::default();
        let cbow = CbowConfig::default();
        let model = ModelConfig::default();
        let train = TrainConfig::default();
        let base = BaselineConfig::default();
        RunConfig {
            seed: 0,
            deterministic: false,
            test_fraction: 0.2,
            min_precision: filter.min_precision,
            min_hyponyms: filter.min_hyponyms,
            min_term_sentences: filter.min_term_sentences,
            min_quality_terms: filter.min_quality_terms,
            cbow_window: cbow.window,
            cbow_negatives: cbow.negatives,
            cbow_epochs: cbow.epochs,
            cbow_subsample: cbow.subsample,
            cbow_lr: cbow.learning_rate,
            encoder: model.encoder,
            attention: model.attention,
            dim: model.hp.dim,
            attn_dim: model.hp.attn_dim,
            max_len: model.hp.max_len,
            pos_dim: model.hp.pos_dim,
            cnn_window: model.hp.cnn_window,
            cnn_filters: model.hp.cnn_filters,
            min_freq: model.min_freq,
            init_scale: model.init_scale,
            batch_size: train.batch_size,
            epochs: train.epochs,
            negatives: train.sampler.num_sampled,
            sampler: train.sampler.distribution,
            full_softmax: train.full_softmax,
            lr: train.adam.lr,
            beta1: train.adam.beta1,
            beta2: train.adam.beta2,
            adam_eps: train.adam.eps,
            strip_hypernyms: train.strip_hypernyms,
            lambda1: base.lambda1,
            lambda2: base.lambda2,
            pic_epochs: base.pic.epochs,
            pic_batch_size: base.pic.batch_size,
            pic_negatives: base.pic.sampler.num_sampled,
            pic_lr: base.pic.adam.lr,
            cutoffs: case_core::eval::DEFAULT_CUTOFFS.to_vec(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("`{key}` cannot be `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` must be true or false, not `{value}`"))),
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse(key, v)?,
            "deterministic" => self.deterministic = parse_bool(key, v)?,
            "test_fraction" => self.test_fraction = parse(key, v)?,
            "min_precision" => self.min_precision = parse(key, v)?,
            "min_hyponyms" => self.min_hyponyms = parse(key, v)?,
            "min_term_sentences" => self.min_term_sentences = parse(key, v)?,
            "min_quality_terms" => self.min_quality_terms = parse(key, v)?,
            "cbow_window" => self.cbow_window = parse(key, v)?,
            "cbow_negatives" => self.cbow_negatives = parse(key, v)?,
            "cbow_epochs" => self.cbow_epochs = parse(key, v)?,
            "cbow_subsample" => self.cbow_subsample = parse(key, v)?,
            "cbow_lr" => self.cbow_lr = parse(key, v)?,
            "encoder" => self.encoder = parse(key, v)?,
            "attention" => self.attention = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "attn_dim" => self.attn_dim = parse(key, v)?,
            "max_len" => self.max_len = parse(key, v)?,
            "pos_dim" => self.pos_dim = parse(key, v)?,
            "cnn_window" => self.cnn_window = parse(key, v)?,
            "cnn_filters" => self.cnn_filters = parse(key, v)?,
            "min_freq" => self.min_freq = parse(key, v)?,
            "init_scale" => self.init_scale = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "negatives" => self.negatives = parse(key, v)?,
            "sampler" => self.sampler = parse(key, v)?,
            "full_softmax" => self.full_softmax = parse_bool(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "beta1" => self.beta1 = parse(key, v)?,
            "beta2" => self.beta2 = parse(key, v)?,
            "adam_eps" => self.adam_eps = parse(key, v)?,
            "strip_hypernyms" => self.strip_hypernyms = parse_bool(key, v)?,
            "lambda1" => self.lambda1 = parse(key, v)?,
            "lambda2" => self.lambda2 = parse(key, v)?,
            "pic_epochs" => self.pic_epochs = parse(key, v)?,
            "pic_batch_size" => self.pic_batch_size = parse(key, v)?,
            "pic_negatives" => self.pic_negatives = parse(key, v)?,
            "pic_lr" => self.pic_lr = parse(key, v)?,
            "cutoffs" => {
                self.cutoffs = v.split(',').map(|c| parse(key, c.trim())).collect::<Result<_>>()?;
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn is_key(key: &str) -> bool {
        RunConfig::default().entries().iter().any(|(k, _)| *k == key)
    }

    /// Every key with its canonical value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let cutoffs: Vec<String> = self.cutoffs.iter().map(usize::to_string).collect();
        vec![
            ("seed", self.seed.to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("test_fraction", self.test_fraction.to_string()),
            ("min_precision", self.min_precision.to_string()),
            ("min_hyponyms", self.min_hyponyms.to_string()),
            ("min_term_sentences", self.min_term_sentences.to_string()),
            ("min_quality_terms", self.min_quality_terms.to_string()),
            ("cbow_window", self.cbow_window.to_string()),
            ("cbow_negatives", self.cbow_negatives.to_string()),
            ("cbow_epochs", self.cbow_epochs.to_string()),
            ("cbow_subsample", self.cbow_subsample.to_string()),
            ("cbow_lr", self.cbow_lr.to_string()),
            ("encoder", self.encoder.to_string()),
            ("attention", self.attention.to_string()),
            ("dim", self.dim.to_string()),
            ("attn_dim", self.attn_dim.to_string()),
            ("max_len", self.max_len.to_string()),
            ("pos_dim", self.pos_dim.to_string()),
            ("cnn_window", self.cnn_window.to_string()),
            ("cnn_filters", self.cnn_filters.to_string()),
            ("min_freq", self.min_freq.to_string()),
            ("init_scale", self.init_scale.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("negatives", self.negatives.to_string()),
            ("sampler", self.sampler.as_str().to_string()),
            ("full_softmax", self.full_softmax.to_string()),
            ("lr", self.lr.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("adam_eps", self.adam_eps.to_string()),
            ("strip_hypernyms", self.strip_hypernyms.to_string()),
            ("lambda1", self.lambda1.to_string()),
            ("lambda2", self.lambda2.to_string()),
            ("pic_epochs", self.pic_epochs.to_string()),
            ("pic_batch_size", self.pic_batch_size.to_string()),
            ("pic_negatives", self.pic_negatives.to_string()),
            ("pic_lr", self.pic_lr.to_string()),
            ("cutoffs", cutoffs.join(",")),
        ]
    }

    /// Canonical `key = value` text.
    pub fn render(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Short SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.render().as_bytes());
        d.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Applies `key = value` lines. Returns a warning for every key set
    /// more than once; the last occurrence wins.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<Vec<String>> {
        let mut seen = std::collections::BTreeMap::new();
        let mut warnings = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            self.set(k, v).map_err(|e| Error::Config(format!("{origin}:{}: {e}", n + 1)))?;
            if let Some(prev) = seen.insert(k.to_string(), n + 1) {
                warnings.push(format!("{origin}:{}: `{k}` also set on line {prev}; the later value wins", n + 1));
            }
        }
        Ok(warnings)
    }

    /// Defaults, then the file (if any), then `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<(Self, Vec<String>)> {
        let mut cfg = RunConfig::default();
        let mut warnings = Vec::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(crate::at(p))?;
            warnings = cfg.apply_text(&text, &p.display().to_string())?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok((cfg, warnings))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must lie in (0, 1)".into()));
        }
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(Error::Config("cutoffs must be positive".into()));
        }
        case_core::encoders::validate_combo(self.encoder, self.attention)?;
        self.model().hp.validate()?;
        self.train().validate()?;
        self.cbow().validate()?;
        self.baselines().validate()?;
        Ok(())
    }

    pub fn filter(&self) -> FilterConfig {
        FilterConfig {
            min_precision: self.min_precision,
            min_hyponyms: self.min_hyponyms,
            min_term_sentences: self.min_term_sentences,
            min_quality_terms: self.min_quality_terms,
        }
    }

    pub fn cbow(&self) -> CbowConfig {
        CbowConfig {
            dim: self.dim,
            window: self.cbow_window,
            negatives: self.cbow_negatives,
            epochs: self.cbow_epochs,
            subsample: self.cbow_subsample,
            learning_rate: self.cbow_lr,
            seed: self.seed,
            ..CbowConfig::default()
        }
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            encoder: self.encoder,
            attention: self.attention,
            hp: HyperParams {
                dim: self.dim,
                attn_dim: self.attn_dim,
                max_len: self.max_len,
                pos_dim: self.pos_dim,
                cnn_window: self.cnn_window,
                cnn_filters: self.cnn_filters,
            },
            min_freq: self.min_freq,
            init_scale: self.init_scale,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            sampler: SamplerConfig { num_sampled: self.negatives, distribution: self.sampler, ..SamplerConfig::default() },
            full_softmax: self.full_softmax,
            adam: AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.adam_eps },
            seed: self.seed,
            strip_hypernyms: self.strip_hypernyms,
        }
    }

    pub fn baselines(&self) -> BaselineConfig {
        BaselineConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            pic: PicConfig {
                epochs: self.pic_epochs,
                batch_size: self.pic_batch_size,
                sampler: SamplerConfig { num_sampled: self.pic_negatives, distribution: self.sampler, ..SamplerConfig::default() },
                adam: AdamConfig { lr: self.pic_lr, ..AdamConfig::default() },
                seed: self.seed,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "# nothing here\n\n").unwrap();
        let (cfg, warnings) = RunConfig::load(Some(&p), &[]).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.dim, cfg.attn_dim, cfg.batch_size, cfg.negatives, cfg.epochs), (100, 10, 128, 1000, 10));
    }

    #[test]
    fn precedence_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "epochs = 5\nencoder = lstm # trailing comment\nepochs = 7\n").unwrap();
        let (cfg, warnings) = RunConfig::load(Some(&p), &[]).unwrap();
        assert_eq!(cfg.epochs, 7);
        assert_eq!(cfg.encoder, EncoderKind::Lstm);
        assert_eq!(warnings.len(), 1);
        let (cfg, _) = RunConfig::load(Some(&p), &[("epochs".into(), "3".into())]).unwrap();
        assert_eq!(cfg.epochs, 3);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("epoch", "3").is_err());
        assert!(cfg.set("epochs", "three").is_err());
        assert!(cfg.set("full_softmax", "maybe").is_err());
        assert!(cfg.apply_text("dim 5", "x").is_err());
        assert!(RunConfig::load(None, &[("encoder".into(), "none".into()), ("attention".into(), "dot".into())]).is_err());
    }

    #[test]
    fn render_round_trips_and_hash_tracks_changes() {
        let mut cfg = RunConfig::default();
        cfg.set("cutoffs", "1,3").unwrap();
        cfg.set("sampler", "uniform").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.render(), "rendered").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        back.set("seed", "9").unwrap();
        assert_ne!(back.hash(), cfg.hash());
        assert!(RunConfig::is_key("pic_lr"));
        assert!(!RunConfig::is_key("in"));
    }
}
