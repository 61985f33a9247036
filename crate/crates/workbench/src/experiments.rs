//! Experiment drivers: parallel evaluation, model training from a run
//! config, and ablation arms.

use std::str::FromStr;

use case_core::corpus::{split, strip_hypernym, AnnotatedSentence, TermLexicon};
use case_core::embeddings::DualEmbedding;
use case_core::encoders::{validate_combo, AttentionKind, EncoderKind};
use case_core::eval::{evaluate_rankings, gold_labels, EvalReport, EvalSample, Ranker};
use case_core::model::{samples_from_sentence, CaseModel, EpochStats};
use rayon::prelude::*;

use crate::{Error, Result, RunConfig};

/// Sets up the global worker pool: one thread in deterministic mode,
/// otherwise `CASE_THREADS` or all cores. Returns the thread count.
pub fn configure_threads(deterministic: bool) -> usize {
    let threads = if deterministic {
        1
    } else {
        std::env::var("CASE_THREADS").ok().and_then(|v| v.parse().ok()).filter(|n| *n > 0).unwrap_or(0)
    };
    // A pool built earlier in the process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    rayon::current_num_threads()
}

/// Same result as [`case_core::eval::evaluate`], ranking samples in
/// parallel.
pub fn par_evaluate<R: Ranker + Sync + ?Sized>(
    system: &R,
    test: &[AnnotatedSentence],
    lexicon: &TermLexicon,
    cutoffs: &[usize],
) -> Result<EvalReport> {
    let depth = cutoffs.iter().copied().max().unwrap_or(0);
    let mut pairs = Vec::new();
    for rec in test.iter().filter(|r| r.terms.len() >= 2) {
        for s in samples_from_sentence(rec)? {
            pairs.push((rec, s.seed));
        }
    }
    let samples = pairs
        .par_iter()
        .map(|(rec, seed)| {
            Ok(EvalSample {
                id: rec.id.clone(),
                seed: seed.to_string(),
                gold: gold_labels(rec, seed, lexicon),
                ranking: system.rank(seed, &rec.context, depth)?,
            })
        })
        .collect::<case_core::Result<Vec<_>>>()?;
    Ok(evaluate_rankings(&samples, cutoffs)?)
}

/// Train/test split driven by the config's fraction and seed.
pub fn split_corpus(records: &[AnnotatedSentence], cfg: &RunConfig) -> Result<(Vec<AnnotatedSentence>, Vec<AnnotatedSentence>)> {
    Ok(split(records, cfg.test_fraction, cfg.seed)?)
}

/// Builds and trains a model as configured.
pub fn train_model<C>(
    train: &[AnnotatedSentence],
    cfg: &RunConfig,
    pretrained: Option<&DualEmbedding>,
    on_epoch: C,
) -> Result<(CaseModel<f32>, Vec<EpochStats>)>
where
    C: FnMut(&EpochStats, &CaseModel<f32>) -> case_core::Result<()>,
{
    let mut model = CaseModel::build(train, cfg.model(), pretrained, cfg.seed)?;
    let history = model.train(train, &cfg.train(), on_epoch)?;
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// The configured model against the same model without a context
    /// encoder.
    NoEncoder,
    /// The configured model trained and tested with and without hypernyms
    /// in the contexts.
    HypernymRemoved,
    /// Every encoder without attention.
    EncoderGrid,
    /// The configured encoder with every attention scorer.
    AttentionGrid,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::NoEncoder, Ablation::HypernymRemoved, Ablation::EncoderGrid, Ablation::AttentionGrid];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::NoEncoder => "no_encoder",
            Ablation::HypernymRemoved => "hypernym_removed",
            Ablation::EncoderGrid => "encoder_grid",
            Ablation::AttentionGrid => "attention_grid",
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown ablation `{s}`")))
    }
}

/// One trained and evaluated configuration.
#[derive(Debug, Clone)]
pub struct Arm {
    pub label: String,
    pub report: EvalReport,
    pub history: Vec<EpochStats>,
}

/// The arms an ablation trains, as `(label, config)` pairs.
pub fn ablation_arms(kind: Ablation, cfg: &RunConfig) -> Vec<(String, RunConfig)> {
    let with = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = cfg.clone();
        f(&mut c);
        c
    };
    let label = |c: &RunConfig| {
        let mut s = format!("{}+{}", c.encoder, c.attention);
        if c.strip_hypernyms {
            s.push_str("-hypernym");
        }
        s
    };
    let configs = match kind {
        Ablation::NoEncoder => vec![
            cfg.clone(),
            with(&|c| {
                c.encoder = EncoderKind::None;
                c.attention = AttentionKind::None;
            }),
        ],
        Ablation::HypernymRemoved => vec![with(&|c| c.strip_hypernyms = false), with(&|c| c.strip_hypernyms = true)],
        Ablation::EncoderGrid => EncoderKind::ALL
            .into_iter()
            .map(|e| {
                with(&|c| {
                    c.encoder = e;
                    c.attention = AttentionKind::None;
                })
            })
            .collect(),
        Ablation::AttentionGrid => AttentionKind::ALL
            .into_iter()
            .filter(|a| validate_combo(cfg.encoder, *a).is_ok())
            .map(|a| with(&|c| c.attention = a))
            .collect(),
    };
    configs.into_iter().map(|c| (label(&c), c)).collect()
}

fn sample_keys(r: &EvalReport) -> Vec<(&str, &str)> {
    r.samples.iter().map(|s| (s.id.as_str(), s.seed.as_str())).collect()
}

/// Trains and evaluates every arm on the same split. Arms that strip
/// hypernyms are tested on stripped contexts too.
pub fn run_ablation(
    kind: Ablation,
    train: &[AnnotatedSentence],
    test: &[AnnotatedSentence],
    cfg: &RunConfig,
    pretrained: Option<&DualEmbedding>,
) -> Result<Vec<Arm>> {
    let mut arms = Vec::new();
    for (label, arm_cfg) in ablation_arms(kind, cfg) {
        arm_cfg.validate()?;
        let (model, history) = train_model(train, &arm_cfg, pretrained, |_, _| Ok(()))?;
        let stripped: Vec<AnnotatedSentence>;
        let arm_test = if arm_cfg.strip_hypernyms {
            stripped = test.iter().map(|r| strip_hypernym(r).0).collect();
            &stripped[..]
        } else {
            test
        };
        let report = par_evaluate(&model, arm_test, model.lexicon(), &arm_cfg.cutoffs)?;
        arms.push(Arm { label, report, history });
    }
    check_aligned(&arms)?;
    Ok(arms)
}

/// Errors unless every arm was scored on the same (sentence, seed) samples.
pub fn check_aligned(arms: &[Arm]) -> Result<()> {
    if let Some(first) = arms.first() {
        let keys = sample_keys(&first.report);
        for arm in &arms[1..] {
            if sample_keys(&arm.report) != keys || arm.report.cutoffs != first.report.cutoffs {
                return Err(Error::Experiment(format!("arm `{}` was evaluated on a different test set", arm.label)));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use case_core::eval::evaluate;
    use case_core::synth::{planted_corpus, PlantedConfig};

    fn small_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        for (k, v) in [("dim", "8"), ("epochs", "2"), ("min_freq", "1"), ("full_softmax", "true"), ("batch_size", "16"), ("cnn_filters", "8"), ("test_fraction", "0.2")] {
            cfg.set(k, v).unwrap();
        }
        cfg
    }

    fn corpus() -> Vec<AnnotatedSentence> {
        planted_corpus(&PlantedConfig { sentences: 60, ..PlantedConfig::class_indicators() }).unwrap().records
    }

    #[test]
    fn parallel_evaluation_matches_sequential() {
        let cfg = small_cfg();
        let (train, test) = split_corpus(&corpus(), &cfg).unwrap();
        let (model, _) = train_model(&train, &cfg, None, |_, _| Ok(())).unwrap();
        let seq = evaluate(&model, &test, model.lexicon(), &cfg.cutoffs).unwrap();
        assert_eq!(par_evaluate(&model, &test, model.lexicon(), &cfg.cutoffs).unwrap(), seq);
    }

    #[test]
    fn arm_lists() {
        let cfg = small_cfg();
        let labels = |k| ablation_arms(k, &cfg).into_iter().map(|a| a.0).collect::<Vec<_>>();
        assert_eq!(labels(Ablation::NoEncoder), ["nbow+none", "none+none"]);
        assert_eq!(labels(Ablation::HypernymRemoved), ["nbow+none", "nbow+none-hypernym"]);
        assert_eq!(labels(Ablation::EncoderGrid).len(), 9);
        assert_eq!(labels(Ablation::AttentionGrid).len(), 5);
        assert_eq!("encoder_grid".parse::<Ablation>().unwrap(), Ablation::EncoderGrid);
        assert!("grid".parse::<Ablation>().is_err());
    }

    #[test]
    fn identical_arms_give_identical_rows() {
        let cfg = small_cfg();
        let (train, test) = split_corpus(&corpus(), &cfg).unwrap();
        let arms = run_ablation(Ablation::HypernymRemoved, &train, &test, &cfg, None).unwrap();
        // synthetic records carry no hypernym, so stripping changes nothing
        assert_eq!(arms[0].report, arms[1].report);
        assert_eq!(arms[0].history, arms[1].history);
    }

    #[test]
    fn misaligned_arms_are_rejected() {
        let cfg = small_cfg();
        let (train, test) = split_corpus(&corpus(), &cfg).unwrap();
        let (model, _) = train_model(&train, &cfg, None, |_, _| Ok(())).unwrap();
        let a = par_evaluate(&model, &test, model.lexicon(), &[10]).unwrap();
        let b = par_evaluate(&model, &test[1..], model.lexicon(), &[10]).unwrap();
        let arms = [
            Arm { label: "a".into(), report: a, history: vec![] },
            Arm { label: "b".into(), report: b, history: vec![] },
        ];
        assert!(check_aligned(&arms).is_err());
    }
}
