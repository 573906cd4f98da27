mod common;

use common::{words, ToyLanguage};
use prismkit::baselines::{chrf, corpus_bleu, sent_bleu, BleuConfig, Smoothing};
use prismkit::scoring::seq_log_prob;
use prismkit::LanguageModel;

#[test]
fn bigram_hand_computation() {
    // V = {a, b, </s>, <unk>}, k = 1
    let lm = LanguageModel::train(&[words("a b"), words("b")], 2, 1.0).unwrap();
    let lp = lm.lm_log_prob(&words("a b"));
    let want = [
        (2.0f64 / 6.0).ln(),
        (2.0f64 / 5.0).ln(),
        (3.0f64 / 6.0).ln(),
    ];
    for (got, want) in lp.token_log_probs().iter().zip(want) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    let total: f64 = want.iter().sum();
    assert!((seq_log_prob(&lp) - total).abs() < 1e-12);
}

#[test]
fn unigram_single_line() {
    let k = 0.1;
    let lm = LanguageModel::train(&[words("a a")], 1, k).unwrap();
    let v = lm.vocab_size() as f64;
    assert_eq!(v, 3.0);
    // three events: a, a, </s>
    assert!((lm.prob(&[], "a") - (2.0 + k) / (3.0 + k * v)).abs() < 1e-15);
}

#[test]
fn unseen_tokens_map_to_unk() {
    let lm = LanguageModel::train(&[words("a b")], 2, 0.5).unwrap();
    let lp = lm.lm_log_prob(&words("a zzz"));
    assert_eq!(lp.output_len(), 3);
    assert!(lp
        .token_log_probs()
        .iter()
        .all(|v| v.is_finite() && *v < 0.0));
}

#[test]
fn training_is_deterministic_and_persistable() {
    let corpus = ToyLanguage::new(20).corpus(80, 31);
    let a = LanguageModel::train(&corpus, 3, 0.2).unwrap();
    let b = LanguageModel::train(&corpus, 3, 0.2).unwrap();
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    a.save_json(&mut buf_a).unwrap();
    b.save_json(&mut buf_b).unwrap();
    assert_eq!(buf_a, buf_b);
    let loaded = LanguageModel::load_json(buf_a.as_slice()).unwrap();
    for s in &corpus[..10] {
        assert_eq!(a.lm_log_prob(s), loaded.lm_log_prob(s));
    }
}

#[test]
fn invalid_lm_parameters() {
    assert!(LanguageModel::train(&[words("a")], 0, 0.1).is_err());
    assert!(LanguageModel::train(&[words("a")], 2, 0.0).is_err());
}

#[test]
fn bleu_of_identical_corpus_is_100() {
    let corpus = ToyLanguage::new(20).corpus(20, 32);
    let cfg = BleuConfig::default();
    let v: f64 = corpus_bleu(corpus.iter().zip(&corpus), &cfg).unwrap();
    assert!((v - 100.0).abs() < 1e-9);
    for s in &corpus {
        assert_eq!(sent_bleu::<f64>(s, s, &cfg).unwrap(), 100.0);
    }
}

#[test]
fn bleu_smoothing_variants_stay_in_range() {
    let r = words("the cat sat on the mat");
    let h = words("the cat sat on a mat");
    for smoothing in [Smoothing::None, Smoothing::AddOne, Smoothing::Epsilon(0.1)] {
        let cfg = BleuConfig {
            smoothing,
            ..BleuConfig::default()
        };
        let v: f64 = sent_bleu(&h, &r, &cfg).unwrap();
        assert!(v > 0.0 && v < 100.0, "{smoothing:?}: {v}");
    }
}

#[test]
fn chrf_bounds() {
    assert_eq!(chrf::<f64>("abc def", "abc def", 6, 2.0).unwrap(), 100.0);
    assert_eq!(chrf::<f64>("xyz", "abc", 6, 2.0).unwrap(), 0.0);
    let partial = chrf::<f64>("abc dex", "abc def", 6, 2.0).unwrap();
    assert!(partial > 0.0 && partial < 100.0);
}
