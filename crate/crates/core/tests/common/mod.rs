//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use prismkit::text::Lang;
use prismkit::ChannelParams;
use prismkit::TokenSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn lang() -> Lang {
    Lang::new("xx").unwrap()
}

pub fn seq(tokens: &[&str]) -> TokenSequence {
    TokenSequence::new(tokens.iter().copied(), lang())
}

pub fn words(s: &str) -> TokenSequence {
    TokenSequence::new(s.split_whitespace(), lang())
}

/// Every sequence over `vocab` of length `0..=max_len`, shortest first.
pub fn all_sequences(vocab: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for t in vocab {
                let mut s2 = s.clone();
                s2.push(t.to_string());
                next.push(s2);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The channel written out event by event, straight from its definition.
pub struct ChannelOracle<'a> {
    pub params: ChannelParams,
    pub background: &'a dyn Fn(&str) -> f64,
}

impl ChannelOracle<'_> {
    fn stop(&self, n: usize, s: usize) -> f64 {
        self.params.stop_base * self.params.stop_decay.powi((n - s) as i32)
    }

    /// Continue-event probabilities from state `s`: insertion, then consume-d for d = 1..=n-s.
    fn events(&self, n: usize, s: usize) -> (f64, Vec<f64>) {
        let p = &self.params;
        let ins_w = p.ins;
        let consume_w: Vec<f64> = (1..=n - s)
            .map(|d| (1.0 - p.ins) * (1.0 - p.del_cont) * p.del_cont.powi(d as i32 - 1))
            .collect();
        let z = ins_w + consume_w.iter().sum::<f64>();
        (ins_w / z, consume_w.iter().map(|w| w / z).collect())
    }

    fn emit(&self, source: &str, out: &str) -> f64 {
        let eps = self.params.eps;
        let same = if source == out { 1.0 - eps } else { 0.0 };
        same + eps * (self.background)(out)
    }

    /// Sum over every alignment path that emits `y[t..]` starting from state `s`
    /// (then EOS when `terminated`). No memoization: each path is visited.
    fn paths(&self, x: &[String], y: &[String], s: usize, t: usize, terminated: bool) -> f64 {
        let n = x.len();
        if t == y.len() {
            return if terminated { self.stop(n, s) } else { 1.0 };
        }
        let cont = 1.0 - self.stop(n, s);
        let (ins, consume) = self.events(n, s);
        let mut total = ins * (self.background)(&y[t]) * self.paths(x, y, s, t + 1, terminated);
        for (i, c) in consume.iter().enumerate() {
            let d = i + 1;
            total +=
                c * self.emit(&x[s + d - 1], &y[t]) * self.paths(x, y, s + d, t + 1, terminated);
        }
        cont * total
    }

    pub fn prefix_prob(&self, x: &[String], y: &[String], terminated: bool) -> f64 {
        self.paths(x, y, 0, 0, terminated)
    }

    /// `P(|y| = m)`: the same path sum with emissions marginalized out.
    pub fn length_prob(&self, n: usize, m: usize) -> f64 {
        fn go(o: &ChannelOracle<'_>, n: usize, s: usize, left: usize) -> f64 {
            if left == 0 {
                return o.stop(n, s);
            }
            let (ins, consume) = o.events(n, s);
            let mut total = ins * go(o, n, s, left - 1);
            for (i, c) in consume.iter().enumerate() {
                total += c * go(o, n, s + i + 1, left - 1);
            }
            (1.0 - o.stop(n, s)) * total
        }
        go(self, n, 0, m)
    }
}

/// Toy bigram language used to generate synthetic corpora.
pub struct ToyLanguage {
    pub vocab: Vec<String>,
}

impl ToyLanguage {
    pub fn new(size: usize) -> Self {
        ToyLanguage {
            vocab: (0..size).map(|i| format!("w{i}")).collect(),
        }
    }

    /// Sentences of 6..=14 tokens. Each token prefers a few successors, so the
    /// corpus has real bigram structure for an LM to learn.
    pub fn corpus(&self, n: usize, seed: u64) -> Vec<TokenSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = self.vocab.len();
        (0..n)
            .map(|_| {
                let len = rng.gen_range(6..=14);
                let mut cur = rng.gen_range(0..v);
                let mut toks = vec![self.vocab[cur].clone()];
                for _ in 1..len {
                    cur = if rng.gen_bool(0.8) {
                        (cur * 7 + rng.gen_range(1..=3)) % v
                    } else {
                        rng.gen_range(0..v)
                    };
                    toks.push(self.vocab[cur].clone());
                }
                TokenSequence::new(toks, lang())
            })
            .collect()
    }
}

/// `(C - D) / (C + D)` by explicit counting, ties discordant.
pub fn brute_kendall(pairs: &[(f64, f64)]) -> f64 {
    let mut c = 0i64;
    let mut d = 0i64;
    for &(better, worse) in pairs {
        if better > worse {
            c += 1;
        } else {
            d += 1;
        }
    }
    (c - d) as f64 / (c + d) as f64
}

/// Pearson r from exact rational sums; only the final square root is rounded.
pub fn exact_pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let q = |v: f64| BigRational::from_float(v).unwrap();
    let n = BigRational::from_integer(xs.len().into());
    let xs: Vec<BigRational> = xs.iter().map(|&v| q(v)).collect();
    let ys: Vec<BigRational> = ys.iter().map(|&v| q(v)).collect();
    let sx: BigRational = xs.iter().cloned().sum();
    let sy: BigRational = ys.iter().cloned().sum();
    let sxy: BigRational = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
    let sxx: BigRational = xs.iter().map(|a| a * a).sum();
    let syy: BigRational = ys.iter().map(|b| b * b).sum();
    let cov = &n * sxy - &sx * &sy;
    let vx = &n * sxx - &sx * &sx;
    let vy = &n * syy - &sy * &sy;
    if vx.is_zero() || vy.is_zero() {
        return None;
    }
    let r2 = (&cov * &cov) / (vx * vy);
    let r = r2.to_f64()?.sqrt();
    Some(if cov.is_negative() { -r } else { r })
}
