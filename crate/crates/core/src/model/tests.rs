use super::*;
use crate::corpus::PLACEHOLDER;
use crate::numerics::AdamConfig;
use alloc::string::ToString;

fn rec(id: &str, context: &str, terms: &[&str]) -> AnnotatedSentence {
    AnnotatedSentence {
        id: id.into(),
        context: context.split_whitespace().map(ToString::to_string).collect(),
        terms: terms.iter().map(|t| t.to_string()).collect(),
        hypernym_span: None,
    }
}

fn tiny_config(encoder: EncoderKind, attention: AttentionKind) -> ModelConfig {
    ModelConfig {
        encoder,
        attention,
        hp: HyperParams { dim: 6, attn_dim: 3, max_len: 8, pos_dim: 2, cnn_window: 3, cnn_filters: 6 },
        min_freq: 1,
        init_scale: 0.05,
    }
}

fn corpus() -> Vec<AnnotatedSentence> {
    vec![
        rec("a", "we eat PLACEHOLDER and other fruit every day", &["apple", "pear", "plum"]),
        rec("b", "the zoo keep PLACEHOLDER and other animal", &["lion", "tiger", "bear"]),
        rec("c", "fruit such as PLACEHOLDER taste sweet", &["fig", "apple", "kiwi"]),
    ]
}

#[test]
fn zero_head_gives_uniform_probabilities() {
    let mut m = CaseModel::<f64>::build(&corpus(), tiny_config(EncoderKind::Nbow, AttentionKind::None), None, 1).unwrap();
    let (w, b) = (m.head_w, m.head_b);
    m.params.value_mut(w).fill(0.0);
    m.params.value_mut(b).fill(0.0);
    let e = m.encode("apple", &["x", PLACEHOLDER]).unwrap();
    let p = m.probabilities(&e).unwrap();
    let n = m.lexicon().len() as f64;
    assert!(p.iter().all(|v| (v - 1.0 / n).abs() < 1e-12));
}

#[test]
fn two_label_hand_evaluation() {
    let recs = [rec("r", "a PLACEHOLDER", &["x", "y"])];
    let mut m = CaseModel::<f64>::build(&recs, tiny_config(EncoderKind::None, AttentionKind::None), None, 3).unwrap();
    let (w, b) = (m.head_w, m.head_b);
    let x = m.features(&m.encode("x", &["a", PLACEHOLDER]).unwrap()).unwrap();
    let wv: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.4).collect();
    m.params.set_value(w, Tensor::from_vec(&[2, 6], wv.clone()).unwrap()).unwrap();
    m.params.set_value(b, Tensor::from_vec(&[2], vec![0.3, -0.2]).unwrap()).unwrap();
    let z0: f64 = wv[..6].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + 0.3;
    let z1: f64 = wv[6..].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() - 0.2;
    let logits = m.logits(&x).unwrap();
    assert!((logits[0] - z0).abs() < 1e-12 && (logits[1] - z1).abs() < 1e-12);
    let p = m.probabilities(&m.encode("x", &["a", PLACEHOLDER]).unwrap()).unwrap();
    assert!((p[0] - z0.exp() / (z0.exp() + z1.exp())).abs() < 1e-12);
    let out = m.expand("x", &["a", PLACEHOLDER], 1).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].term, "y");
    assert!(m.expand("x", &["a", PLACEHOLDER], 2).is_err());
}

#[test]
fn no_encoder_ignores_context() {
    let m = CaseModel::<f64>::build(&corpus(), tiny_config(EncoderKind::None, AttentionKind::None), None, 1).unwrap();
    assert_eq!(m.input_width(), 6);
    let base = m.expand("apple", &["we", PLACEHOLDER], 5).unwrap();
    for ctx in [vec!["zoo", "PLACEHOLDER"], vec!["PLACEHOLDER", "sweet", "fruit", "keep"], vec!["tiger", "PLACEHOLDER"]] {
        assert_eq!(m.expand("apple", &ctx, 5).unwrap(), base);
    }
}

#[test]
fn expansion_excludes_seed_and_is_sorted() {
    let m = CaseModel::<f32>::build(&corpus(), tiny_config(EncoderKind::Gru, AttentionKind::Dot), None, 1).unwrap();
    let n = m.lexicon().len();
    let out = m.expand("apple", &["we", "eat", PLACEHOLDER], n - 1).unwrap();
    assert!(out.iter().all(|e| e.term != "apple"));
    assert!(out.windows(2).all(|w| w[0].probability > w[1].probability
        || (w[0].probability == w[1].probability && w[0].label < w[1].label)));
    let unseen = m.expand("durian", &["we", "eat", PLACEHOLDER], n).unwrap();
    assert_eq!(unseen.len(), n);
    assert!(m.expand("apple", &Vec::<&str>::new(), 1).is_err());
    assert!(m.expand("apple", &["no", "slot"], 1).is_err());
}

#[test]
fn probabilities_sum_to_one() {
    let m = CaseModel::<f64>::build(&corpus(), tiny_config(EncoderKind::Cnn, AttentionKind::TransDot), None, 4).unwrap();
    let p = m.probabilities(&m.encode("lion", &["the", "zoo", PLACEHOLDER]).unwrap()).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn whole_model_gradients() {
    for enc in EncoderKind::ALL {
        for att in AttentionKind::ALL {
            if validate_combo(enc, att).is_err() {
                continue;
            }
            for seed in 0..3 {
                let r = check_tiny_gradients(enc, att, seed, 1e-4).unwrap();
                assert!(r.max_rel_error < 1e-4, "{enc}+{att}: {r:?}");
                assert!(r.checked > 10 * r.kinks);
            }
        }
    }
}

#[test]
fn pretrained_vectors_initialise_both_tables() {
    let vocab = Vocabulary::from_word_list(
        ["<pad>", "<oov>", "PLACEHOLDER", "apple", "we"].iter().map(|s| s.to_string()).collect(),
    )
    .unwrap();
    let data: Vec<f32> = (0..30).map(|i| i as f32).collect();
    let t = Tensor::from_vec(&[5, 6], data).unwrap();
    let emb = DualEmbedding::new(vocab, t.clone(), t).unwrap();
    let m = CaseModel::<f32>::build(&corpus(), tiny_config(EncoderKind::Nbow, AttentionKind::None), Some(&emb), 1).unwrap();
    let seed_row = m.seed_vocab().id("apple");
    assert_eq!(m.params().value(m.seed_emb).row(seed_row), [18.0, 19.0, 20.0, 21.0, 22.0, 23.0]);
    let ctx_row = m.context_vocab().id("we");
    assert_eq!(m.params().value(m.ctx_emb.unwrap()).row(ctx_row), [24.0, 25.0, 26.0, 27.0, 28.0, 29.0]);
    assert_eq!(m.params().value(m.ctx_emb.unwrap()).row(Vocabulary::OOV), [6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
}

#[test]
fn from_parts_round_trip() {
    let m = CaseModel::<f32>::build(&corpus(), tiny_config(EncoderKind::BiLstm, AttentionKind::Concat), None, 2).unwrap();
    let back = CaseModel::from_parts(
        *m.config(),
        m.context_vocab().clone(),
        m.seed_vocab().clone(),
        m.lexicon().clone(),
        m.params().clone(),
    )
    .unwrap();
    assert_eq!(back.params(), m.params());
    let mut short = ParamStore::new();
    short.add("seed_emb", Tensor::<f32>::zeros(&[1, 6])).unwrap();
    assert!(CaseModel::from_parts(*m.config(), m.context_vocab().clone(), m.seed_vocab().clone(), m.lexicon().clone(), short).is_err());
}

#[test]
fn memorises_one_sentence() {
    let recs = [rec("m", "young barley grass be high in PLACEHOLDER", &["vitamin", "enzyme", "mineral"])];
    let mut m = CaseModel::<f32>::build(&recs, tiny_config(EncoderKind::Nbow, AttentionKind::None), None, 1).unwrap();
    let cfg = TrainConfig { epochs: 300, batch_size: 3, full_softmax: true, adam: AdamConfig { lr: 0.05, ..Default::default() }, ..Default::default() };
    let hist = m.train(&recs, &cfg, |_, _| Ok(())).unwrap();
    // two targets per seed: the loss floor is ln 2
    assert!((hist.last().unwrap().mean_loss - core::f64::consts::LN_2).abs() < 0.01, "{:?}", hist.last());
    for s in &recs[0].terms {
        let out = m.expand(s, &recs[0].context, 2).unwrap();
        let mut got: Vec<&str> = out.iter().map(|e| e.term.as_str()).collect();
        got.sort_unstable();
        let mut want: Vec<&str> = recs[0].terms.iter().filter(|t| *t != s).map(String::as_str).collect();
        want.sort_unstable();
        assert_eq!(got, want);
    }
}

#[test]
fn training_is_deterministic() {
    let cfg = TrainConfig { epochs: 2, batch_size: 4, sampler: crate::numerics::SamplerConfig { num_sampled: 3, ..Default::default() }, ..Default::default() };
    let run = || {
        let mut m = CaseModel::<f32>::build(&corpus(), tiny_config(EncoderKind::Lstm, AttentionKind::Oblivious), None, 5).unwrap();
        let h = m.train(&corpus(), &cfg, |_, _| Ok(())).unwrap();
        (m.params().clone(), h)
    };
    assert_eq!(run(), run());
}

#[test]
fn sample_count_matches_terms() {
    let m = CaseModel::<f32>::build(&corpus(), tiny_config(EncoderKind::Nbow, AttentionKind::None), None, 1).unwrap();
    let total: usize = corpus().iter().map(|r| r.terms.len()).sum();
    assert_eq!(m.prepare(&corpus()).unwrap().len(), total);
}
