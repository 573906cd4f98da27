//! A monotone HMM edit channel whose most probable output is a copy of its input.
//!
//! The hidden state `s` counts consumed input tokens (`0..=|x|`). From state
//! `s` the model stops with probability `q(s) = stop_base * stop_decay^(|x|-s)`.
//! Otherwise it picks a continue event, renormalized over the feasible ones:
//!
//! * insertion (weight `ins`): emit a token drawn from the background `u`, stay at `s`;
//! * consume `d >= 1` tokens, `s + d <= |x|` (weight `(1-ins)(1-del_cont)del_cont^(d-1)`):
//!   skip `d-1` input tokens, then emit `x[s+d-1]` with probability `1-eps`
//!   or a background token with probability `eps`.
//!
//! At `s = |x|` insertion is the only continue event.

mod beam;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::scoring::{ConditionalScorer, ForceDecodeResult};
use crate::text::TokenSequence;
use crate::{Error, Result, Scalar};

pub use beam::Hypothesis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ChannelParams<T: Scalar> {
    /// Substitution noise on consumed tokens.
    pub eps: T,
    /// Insertion weight.
    pub ins: T,
    /// Geometric continuation of a deletion run.
    pub del_cont: T,
    pub stop_base: T,
    pub stop_decay: T,
}

impl<T: Scalar> Default for ChannelParams<T> {
    fn default() -> Self {
        ChannelParams {
            eps: T::lit(0.05),
            ins: T::lit(0.02),
            del_cont: T::lit(0.05),
            stop_base: T::lit(0.6),
            stop_decay: T::lit(0.1),
        }
    }
}

impl<T: Scalar> ChannelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let open = |name: &'static str, v: T| {
            if v > T::zero() && v < T::one() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} not in (0, 1)")))
            }
        };
        open("eps", self.eps)?;
        open("ins", self.ins)?;
        open("del_cont", self.del_cont)?;
        open("stop_base", self.stop_base)?;
        if !(self.stop_decay > T::zero() && self.stop_decay <= T::one()) {
            return Err(Error::param(
                "stop_decay",
                format!("{} not in (0, 1]", self.stop_decay),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CopyChannelModel<T: Scalar> {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    background: Vec<T>,
    params: ChannelParams<T>,
}

/// Next-token distribution over the vocabulary plus EOS.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution<T: Scalar> {
    pub probs: Vec<T>,
    pub eos: T,
}

impl<T: Scalar> TokenDistribution<T> {
    pub fn total(&self) -> T {
        self.probs.iter().copied().sum::<T>() + self.eos
    }
}

/// Event probabilities for one input sequence.
struct Lattice<T> {
    input: Vec<usize>,
    stop: Vec<T>,
    ins: Vec<T>,
    /// Probability of consume-1 from state `s`; consume-d is `first * del_cont^(d-1)`.
    consume_first: Vec<T>,
}

impl<T: Scalar> CopyChannelModel<T> {
    /// Builds a model from an explicit background distribution.
    pub fn new(
        background: impl IntoIterator<Item = (String, T)>,
        params: ChannelParams<T>,
    ) -> Result<Self> {
        params.validate()?;
        let sorted: BTreeMap<String, T> = background.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::Empty("vocabulary"));
        }
        if let Some((tok, p)) = sorted
            .iter()
            .find(|(_, p)| **p <= T::zero() || !p.is_finite())
        {
            return Err(Error::param(
                "background",
                format!("token {tok:?} has probability {p}"),
            ));
        }
        let total: T = sorted.values().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::param(
                "background",
                format!("sums to {total}, expected 1"),
            ));
        }
        let vocab: Vec<String> = sorted.keys().cloned().collect();
        let background: Vec<T> = sorted.values().copied().collect();
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(CopyChannelModel {
            vocab,
            index,
            background,
            params,
        })
    }

    /// Uniform background over `vocab`.
    pub fn uniform<S: Into<String>>(
        vocab: impl IntoIterator<Item = S>,
        params: ChannelParams<T>,
    ) -> Result<Self> {
        let vocab: std::collections::BTreeSet<String> = vocab.into_iter().map(Into::into).collect();
        let p = T::one() / T::from_count(vocab.len().max(1));
        Self::new(vocab.into_iter().map(|t| (t, p)), params)
    }

    /// Background = add-one smoothed unigram frequencies of `corpus`.
    pub fn from_corpus<'a>(
        corpus: impl IntoIterator<Item = &'a TokenSequence>,
        params: ChannelParams<T>,
    ) -> Result<Self> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0usize;
        for seq in corpus {
            for tok in &seq.tokens {
                *counts.entry(tok.clone()).or_insert(0) += 1;
                total += 1;
            }
        }
        let denom = T::from_count(total + counts.len());
        Self::new(
            counts
                .into_iter()
                .map(|(t, c)| (t, T::from_count(c + 1) / denom)),
            params,
        )
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn params(&self) -> &ChannelParams<T> {
        &self.params
    }

    pub fn background_prob(&self, token: &str) -> Option<T> {
        self.index.get(token).map(|&i| self.background[i])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    fn encode(&self, seq: &TokenSequence, side: &'static str) -> Result<Vec<usize>> {
        seq.tokens
            .iter()
            .enumerate()
            .map(|(position, tok)| {
                self.index
                    .get(tok)
                    .copied()
                    .ok_or_else(|| Error::OutOfVocabulary {
                        token: tok.clone(),
                        position,
                        side,
                    })
            })
            .collect()
    }

    fn lattice(&self, input: Vec<usize>) -> Lattice<T> {
        let n = input.len();
        let p = &self.params;
        let one = T::one();
        let consume_weight = (one - p.ins) * (one - p.del_cont);
        let mut stop = Vec::with_capacity(n + 1);
        let mut ins = Vec::with_capacity(n + 1);
        let mut consume_first = Vec::with_capacity(n + 1);
        for s in 0..=n {
            let remaining = n - s;
            stop.push(p.stop_base * p.stop_decay.powi(remaining as i32));
            // sum_{d=1}^{remaining} lambda^(d-1)
            let geometric = (one - p.del_cont.powi(remaining as i32)) / (one - p.del_cont);
            let z = p.ins + consume_weight * geometric;
            ins.push(p.ins / z);
            consume_first.push(if remaining == 0 {
                T::zero()
            } else {
                consume_weight / z
            });
        }
        Lattice {
            input,
            stop,
            ins,
            consume_first,
        }
    }

    /// Mass flowing out of each state through insertion, and mass arriving at
    /// each state through a consume event, given state weights `alpha`.
    fn transition_mass(&self, lat: &Lattice<T>, alpha: &[T]) -> (Vec<T>, Vec<T>) {
        let n = lat.input.len();
        let lambda = self.params.del_cont;
        let mut ins_mass = vec![T::zero(); n + 1];
        let mut arrive = vec![T::zero(); n + 1];
        let mut run = T::zero();
        for s in 0..=n {
            // run = sum_{r<s} alpha[r] (1-q(r)) consume_first[r] lambda^(s-r-1)
            if s > 0 {
                arrive[s] = run;
            }
            let live = alpha[s] * (T::one() - lat.stop[s]);
            ins_mass[s] = live * lat.ins[s];
            run = run * lambda + live * lat.consume_first[s];
        }
        (ins_mass, arrive)
    }

    /// Advances unnormalized state weights by one emitted token; returns the new
    /// weights and their total.
    fn step(&self, lat: &Lattice<T>, alpha: &[T], token: usize) -> (Vec<T>, T) {
        let (ins_mass, arrive) = self.transition_mass(lat, alpha);
        let eps = self.params.eps;
        let u = self.background[token];
        let mut next: Vec<T> = ins_mass.iter().map(|&m| m * u).collect();
        for s in 1..next.len() {
            let emit = if lat.input[s - 1] == token {
                T::one() - eps + eps * u
            } else {
                eps * u
            };
            next[s] += arrive[s] * emit;
        }
        let total: T = next.iter().copied().sum();
        (next, total)
    }

    fn eos_prob(lat: &Lattice<T>, alpha: &[T]) -> T {
        alpha.iter().zip(&lat.stop).map(|(&a, &q)| a * q).sum()
    }

    fn initial_alpha(n: usize) -> Vec<T> {
        let mut alpha = vec![T::zero(); n + 1];
        alpha[0] = T::one();
        alpha
    }

    /// Runs the forward recursion, returning `ln p(y_t | y_<t, x)` per token,
    /// and the normalized state posterior after the last token.
    fn forward(&self, lat: &Lattice<T>, output: &[usize]) -> (Vec<T>, Vec<T>) {
        let mut alpha = Self::initial_alpha(lat.input.len());
        let mut log_probs = Vec::with_capacity(output.len() + 1);
        for &tok in output {
            let (next, total) = self.step(lat, &alpha, tok);
            log_probs.push(total.ln().min(T::zero()));
            alpha = next.into_iter().map(|a| a / total).collect();
        }
        (log_probs, alpha)
    }

    /// Log probability of emitting `prefix` as the first tokens of the output
    /// (followed by EOS when `terminated`), summed over all alignment paths.
    pub fn prefix_log_likelihood(
        &self,
        x: &TokenSequence,
        prefix: &TokenSequence,
        terminated: bool,
    ) -> Result<T> {
        let lat = self.lattice(self.encode(x, "input")?);
        let prefix = self.encode(prefix, "output")?;
        let (log_probs, alpha) = self.forward(&lat, &prefix);
        let mut total: T = log_probs.into_iter().sum();
        if terminated {
            total += Self::eos_prob(&lat, &alpha).ln();
        }
        Ok(total)
    }

    pub fn force_decode_copy(
        &self,
        x: &TokenSequence,
        y: &TokenSequence,
    ) -> Result<ForceDecodeResult<T>> {
        let lat = self.lattice(self.encode(x, "input")?);
        let y = self.encode(y, "output")?;
        let (mut log_probs, alpha) = self.forward(&lat, &y);
        log_probs.push(Self::eos_prob(&lat, &alpha).ln().min(T::zero()));
        ForceDecodeResult::new(log_probs)
    }

    fn distribution(&self, lat: &Lattice<T>, alpha: &[T]) -> TokenDistribution<T> {
        let eps = self.params.eps;
        let (ins_mass, arrive) = self.transition_mass(lat, alpha);
        let background_mass: T =
            ins_mass.iter().copied().sum::<T>() + eps * arrive.iter().copied().sum::<T>();
        let mut probs: Vec<T> = self
            .background
            .iter()
            .map(|&u| u * background_mass)
            .collect();
        for s in 1..arrive.len() {
            probs[lat.input[s - 1]] += (T::one() - eps) * arrive[s];
        }
        TokenDistribution {
            probs,
            eos: Self::eos_prob(lat, alpha),
        }
    }

    /// Distribution of the next output token after `prefix`. `probs` is indexed
    /// like [`vocab`](Self::vocab).
    pub fn next_token_dist(
        &self,
        x: &TokenSequence,
        prefix: &TokenSequence,
    ) -> Result<TokenDistribution<T>> {
        let lat = self.lattice(self.encode(x, "input")?);
        let prefix = self.encode(prefix, "output")?;
        let (_, alpha) = self.forward(&lat, &prefix);
        Ok(self.distribution(&lat, &alpha))
    }

    pub fn save_json(&self, w: impl Write) -> Result<()> {
        let file = ModelFile {
            vocab: self.vocab.clone(),
            background: self
                .vocab
                .iter()
                .cloned()
                .zip(self.background.iter().copied())
                .collect(),
            params: self.params,
        };
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    pub fn load_json(r: impl Read) -> Result<Self> {
        let file: ModelFile<T> = serde_json::from_reader(r)?;
        let listed: std::collections::BTreeSet<&String> = file.vocab.iter().collect();
        let keyed: std::collections::BTreeSet<&String> = file.background.keys().collect();
        if listed != keyed {
            return Err(Error::param(
                "vocab",
                "vocab list and background keys differ",
            ));
        }
        Self::new(file.background, file.params)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct ModelFile<T: Scalar> {
    vocab: Vec<String>,
    background: BTreeMap<String, T>,
    params: ChannelParams<T>,
}

impl<T: Scalar> ConditionalScorer<T> for CopyChannelModel<T> {
    fn force_decode(
        &self,
        input: &TokenSequence,
        output: &TokenSequence,
    ) -> Result<ForceDecodeResult<T>> {
        self.force_decode_copy(input, output)
    }
}
