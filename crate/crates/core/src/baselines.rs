//! Sentence BLEU and chrF.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::{ngrams_of, TokenSequence};
use crate::{Error, Result, Scalar};

/// How zero or small n-gram match counts are smoothed in sentence BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method", content = "value")]
pub enum Smoothing {
    /// Plain BLEU: any order without matches gives zero.
    None,
    /// A zero match count is replaced by `epsilon` (Chen & Cherry method 1).
    Epsilon(f64),
    /// One is added to the match and total counts of every order.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            smoothing: Smoothing::Epsilon(0.1),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct BleuStats {
    matches: Vec<usize>,
    totals: Vec<usize>,
    sys_len: usize,
    ref_len: usize,
}

impl BleuStats {
    fn new(max_order: usize) -> Self {
        BleuStats {
            matches: vec![0; max_order],
            totals: vec![0; max_order],
            ..Default::default()
        }
    }

    fn add(&mut self, sys: &[String], reference: &[String]) {
        for n in 1..=self.matches.len() {
            let s = ngrams_of(sys, n);
            let r = ngrams_of(reference, n);
            self.matches[n - 1] += s.clipped_matches(&r);
            self.totals[n - 1] += s.total();
        }
        self.sys_len += sys.len();
        self.ref_len += reference.len();
    }

    /// Orders with no candidate n-grams are left out of the geometric mean.
    fn score<T: Scalar>(&self, smoothing: Smoothing) -> T {
        if self.sys_len == 0 {
            return T::zero();
        }
        let mut log_sum = T::zero();
        let mut effective = 0usize;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            if t == 0 {
                continue;
            }
            effective += 1;
            let (m, t) = (T::from_count(m), T::from_count(t));
            let p = match smoothing {
                Smoothing::None => m / t,
                Smoothing::Epsilon(eps) if m == T::zero() => T::lit(eps) / t,
                Smoothing::Epsilon(_) => m / t,
                Smoothing::AddOne => (m + T::one()) / (t + T::one()),
            };
            if p == T::zero() {
                return T::zero();
            }
            log_sum += p.ln();
        }
        let precision = (log_sum / T::from_count(effective)).exp();
        let bp = if self.sys_len < self.ref_len {
            (T::one() - T::from_count(self.ref_len) / T::from_count(self.sys_len)).exp()
        } else {
            T::one()
        };
        (T::lit(100.0) * bp * precision).min(T::lit(100.0))
    }
}

fn check(cfg: &BleuConfig) -> Result<()> {
    if cfg.max_order == 0 {
        return Err(Error::param("max_order", "must be at least 1"));
    }
    if let Smoothing::Epsilon(e) = cfg.smoothing {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::param("epsilon", "must be positive"));
        }
    }
    Ok(())
}

/// Sentence-level BLEU in `[0, 100]`.
pub fn sent_bleu<T: Scalar>(
    sys: &TokenSequence,
    reference: &TokenSequence,
    cfg: &BleuConfig,
) -> Result<T> {
    check(cfg)?;
    if reference.is_empty() {
        return Err(Error::Empty("reference"));
    }
    let mut stats = BleuStats::new(cfg.max_order);
    stats.add(&sys.tokens, &reference.tokens);
    Ok(stats.score(cfg.smoothing))
}

/// Corpus-level BLEU: counts are pooled over all pairs before combining.
pub fn corpus_bleu<'a, T: Scalar>(
    pairs: impl IntoIterator<Item = (&'a TokenSequence, &'a TokenSequence)>,
    cfg: &BleuConfig,
) -> Result<T> {
    check(cfg)?;
    let mut stats = BleuStats::new(cfg.max_order);
    let mut any = false;
    for (sys, reference) in pairs {
        stats.add(&sys.tokens, &reference.tokens);
        any = true;
    }
    if !any || stats.ref_len == 0 {
        return Err(Error::Empty("reference corpus"));
    }
    Ok(stats.score(cfg.smoothing))
}

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut out = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// chrF in `[0, 100]` over character n-grams of orders `1..=char_order`, whitespace removed.
///
/// Precision and recall are averaged over the orders where either side has
/// n-grams, then combined into an F-beta score.
pub fn chrf<T: Scalar>(sys: &str, reference: &str, char_order: usize, beta: T) -> Result<T> {
    if char_order == 0 {
        return Err(Error::param("char_order", "must be at least 1"));
    }
    let strip = |s: &str| -> Vec<char> { s.chars().filter(|c| !c.is_whitespace()).collect() };
    let (hyp, rf) = (strip(sys), strip(reference));
    if rf.is_empty() {
        return Err(Error::Empty("reference"));
    }
    if hyp.is_empty() {
        return Ok(T::zero());
    }
    let mut precision = T::zero();
    let mut recall = T::zero();
    let mut orders = 0usize;
    for n in 1..=char_order {
        let h = char_ngrams(&hyp, n);
        let r = char_ngrams(&rf, n);
        let h_total: usize = h.values().sum();
        let r_total: usize = r.values().sum();
        if h_total == 0 && r_total == 0 {
            continue;
        }
        orders += 1;
        let matches: usize = h
            .iter()
            .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
            .sum();
        if h_total > 0 {
            precision += T::from_count(matches) / T::from_count(h_total);
        }
        if r_total > 0 {
            recall += T::from_count(matches) / T::from_count(r_total);
        }
    }
    let precision = precision / T::from_count(orders);
    let recall = recall / T::from_count(orders);
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == T::zero() {
        return Ok(T::zero());
    }
    Ok(T::lit(100.0) * (T::one() + b2) * precision * recall / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Lang;
    use proptest::prelude::*;

    fn seq(s: &str) -> TokenSequence {
        TokenSequence::new(s.split_whitespace(), Lang::new("en").unwrap())
    }

    #[test]
    fn identical_is_hundred() {
        for s in [
            "a",
            "a b",
            "the cat sat on the mat",
            "Jason went to school at the University of Madrid .",
        ] {
            for smoothing in [Smoothing::None, Smoothing::Epsilon(0.1), Smoothing::AddOne] {
                let cfg = BleuConfig {
                    max_order: 4,
                    smoothing,
                };
                let v: f64 = sent_bleu(&seq(s), &seq(s), &cfg).unwrap();
                assert!((v - 100.0).abs() < 1e-9, "{s}: {v}");
            }
        }
    }

    #[test]
    fn disjoint_is_near_zero() {
        let v: f64 = sent_bleu(&seq("w x y z"), &seq("a b c d"), &BleuConfig::default()).unwrap();
        // (0.1/4 * 0.1/3 * 0.1/2 * 0.1/1)^(1/4) * 100
        let expected = 100.0 * (0.025f64 * (0.1 / 3.0) * 0.05 * 0.1).powf(0.25);
        assert!((v - expected).abs() < 1e-9);
        assert!(v < 5.0);
        let none: f64 = sent_bleu(
            &seq("w x y z"),
            &seq("a b c d"),
            &BleuConfig {
                max_order: 4,
                smoothing: Smoothing::None,
            },
        )
        .unwrap();
        assert_eq!(none, 0.0);
    }

    #[test]
    fn hand_computed_with_brevity_penalty() {
        // sys: 3 tokens, ref: 4 tokens; p1 = 3/3, p2 = 1/2, p3 = eps/1 (no match)
        let v: f64 = sent_bleu(&seq("a b d"), &seq("a b c d"), &BleuConfig::default()).unwrap();
        let expected = 100.0 * (1.0 - 4.0f64 / 3.0).exp() * (1.0f64 * 0.5 * 0.1).powf(1.0 / 3.0);
        assert!((v - expected).abs() < 1e-9, "{v} vs {expected}");
    }

    #[test]
    fn empty_inputs() {
        assert!(sent_bleu::<f64>(&seq("a"), &seq(""), &BleuConfig::default()).is_err());
        assert_eq!(
            sent_bleu::<f64>(&seq(""), &seq("a"), &BleuConfig::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn chrf_cases() {
        assert_eq!(chrf::<f64>("abc def", "abc def", 6, 2.0).unwrap(), 100.0);
        assert_eq!(chrf::<f64>("abc", "xyz", 6, 2.0).unwrap(), 0.0);
        // orders 1, 2: P = (1 + 1)/2, R = (2/3 + 1/2)/2 = 7/12; F2 = 5PR/(4P+R) = 7/11
        let v: f64 = chrf("ab", "abc", 2, 2.0).unwrap();
        assert!((v - 700.0 / 11.0).abs() < 1e-9);
        assert!(chrf::<f64>("a", " ", 6, 2.0).is_err());
        assert_eq!(chrf::<f64>("", "a", 6, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn corpus_bleu_pools_counts() {
        let a = (seq("a b c d"), seq("a b c d"));
        let b = (seq("x y"), seq("x y"));
        let v: f64 = corpus_bleu([(&a.0, &a.1), (&b.0, &b.1)], &BleuConfig::default()).unwrap();
        assert!((v - 100.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn bounded(sys in prop::collection::vec("[a-d]", 0..12), rf in prop::collection::vec("[a-d]", 1..12)) {
            let (s, r) = (seq(&sys.join(" ")), seq(&rf.join(" ")));
            let b: f64 = sent_bleu(&s, &r, &BleuConfig::default()).unwrap();
            prop_assert!((0.0..=100.0).contains(&b));
            let c: f64 = chrf(&sys.join(" "), &rf.join(" "), 6, 2.0).unwrap();
            prop_assert!((0.0..=100.0).contains(&c));
        }

        #[test]
        fn relabeling_invariant(sys in prop::collection::vec(0usize..4, 0..12), rf in prop::collection::vec(0usize..4, 1..12), shift in 1usize..4) {
            let names = ["p", "q", "r", "s"];
            let render = |v: &[usize], k: usize| seq(&v.iter().map(|&i| names[(i + k) % 4]).collect::<Vec<_>>().join(" "));
            let a: f64 = sent_bleu(&render(&sys, 0), &render(&rf, 0), &BleuConfig::default()).unwrap();
            let b: f64 = sent_bleu(&render(&sys, shift), &render(&rf, shift), &BleuConfig::default()).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn self_bleu_is_hundred(x in prop::collection::vec("[a-f]{1,2}", 1..15)) {
            let s = seq(&x.join(" "));
            let v: f64 = sent_bleu(&s, &s, &BleuConfig::default()).unwrap();
            prop_assert!((v - 100.0).abs() < 1e-9);
        }
    }
}
