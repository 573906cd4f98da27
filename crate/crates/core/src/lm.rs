//! Add-k smoothed n-gram language model.
//!
//! `p(w | ctx) = (c(ctx, w) + k) / (c(ctx) + k * V)`, where `V` counts every
//! predictable type: the training tokens, EOS and UNK. Contexts are the previous
//! `order - 1` tokens, padded with BOS at the start of a sentence. Tokens not
//! seen in training are scored as UNK.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::scoring::{ConditionalScorer, ForceDecodeResult};
use crate::text::TokenSequence;
use crate::{Error, Result, Scalar};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

#[derive(Debug, Clone)]
pub struct NGramLm<T: Scalar> {
    order: usize,
    k: T,
    vocab: BTreeSet<String>,
    counts: HashMap<Vec<String>, HashMap<String, u64>>,
    context_totals: HashMap<Vec<String>, u64>,
}

impl<T: Scalar> NGramLm<T> {
    pub fn train<'a>(
        corpus: impl IntoIterator<Item = &'a TokenSequence>,
        order: usize,
        k: T,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::param("order", "must be at least 1"));
        }
        if k <= T::zero() || !k.is_finite() {
            return Err(Error::param("k", format!("{k} must be positive")));
        }
        let corpus: Vec<&TokenSequence> = corpus.into_iter().collect();
        if corpus.is_empty() {
            return Err(Error::Empty("training corpus"));
        }
        let mut vocab: BTreeSet<String> = [EOS, UNK].iter().map(|s| s.to_string()).collect();
        for seq in &corpus {
            vocab.extend(seq.tokens.iter().cloned());
        }
        let mut lm = NGramLm {
            order,
            k,
            vocab,
            counts: HashMap::new(),
            context_totals: HashMap::new(),
        };
        for seq in corpus {
            let events: Vec<(Vec<String>, String)> = lm.events(&seq.tokens).collect();
            for (ctx, next) in events {
                *lm.context_totals.entry(ctx.clone()).or_insert(0) += 1;
                *lm.counts.entry(ctx).or_default().entry(next).or_insert(0) += 1;
            }
        }
        Ok(lm)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> T {
        self.k
    }

    /// Predictable types, EOS and UNK included.
    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn map_token(&self, tok: &str) -> String {
        if self.vocab.contains(tok) && tok != EOS {
            tok.to_string()
        } else {
            UNK.to_string()
        }
    }

    /// (context, next token) pairs for a sentence, EOS included.
    fn events<'s>(
        &'s self,
        tokens: &'s [String],
    ) -> impl Iterator<Item = (Vec<String>, String)> + 's {
        let ctx_len = self.order - 1;
        let mut padded: Vec<String> = vec![BOS.to_string(); ctx_len];
        padded.extend(tokens.iter().map(|t| self.map_token(t)));
        padded.push(EOS.to_string());
        (ctx_len..padded.len()).map(move |i| (padded[i - ctx_len..i].to_vec(), padded[i].clone()))
    }

    pub fn count(&self, context: &[String], next: &str) -> u64 {
        self.counts
            .get(context)
            .and_then(|m| m.get(next))
            .copied()
            .unwrap_or(0)
    }

    pub fn context_count(&self, context: &[String]) -> u64 {
        self.context_totals.get(context).copied().unwrap_or(0)
    }

    /// Smoothed `p(next | context)`. `next` should already be a vocabulary type.
    pub fn prob(&self, context: &[String], next: &str) -> T {
        let num = T::from_u64(self.count(context, next)).expect("count") + self.k;
        let den = T::from_u64(self.context_count(context)).expect("count")
            + self.k * T::from_count(self.vocab.len());
        num / den
    }

    /// Full smoothed distribution for one context, over the vocabulary.
    pub fn distribution(&self, context: &[String]) -> BTreeMap<&str, T> {
        self.vocab
            .iter()
            .map(|w| (w.as_str(), self.prob(context, w)))
            .collect()
    }

    /// Contexts seen in training.
    pub fn contexts(&self) -> impl Iterator<Item = &[String]> {
        self.context_totals.keys().map(Vec::as_slice)
    }

    /// One log probability per token plus EOS.
    pub fn lm_log_prob(&self, y: &TokenSequence) -> ForceDecodeResult<T> {
        let log_probs: Vec<T> = self
            .events(&y.tokens)
            .map(|(ctx, next)| self.prob(&ctx, &next).ln().min(T::zero()))
            .collect();
        ForceDecodeResult::new(log_probs).expect("add-k probabilities are in (0, 1]")
    }

    pub fn save_json(&self, w: impl Write) -> Result<()> {
        let mut counts: Vec<ContextCounts> = self
            .counts
            .iter()
            .map(|(ctx, next)| ContextCounts {
                context: ctx.clone(),
                next: next.iter().map(|(t, &c)| (t.clone(), c)).collect(),
            })
            .collect();
        counts.sort_by(|a, b| a.context.cmp(&b.context));
        let file = LmFile {
            order: self.order,
            k: self.k,
            vocab: self.vocab.iter().cloned().collect(),
            counts,
        };
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    pub fn load_json(r: impl Read) -> Result<Self> {
        let file: LmFile<T> = serde_json::from_reader(r)?;
        if file.order < 1 {
            return Err(Error::param("order", "must be at least 1"));
        }
        if file.k <= T::zero() || !file.k.is_finite() {
            return Err(Error::param("k", "must be positive"));
        }
        let vocab: BTreeSet<String> = file.vocab.into_iter().collect();
        if !vocab.contains(EOS) || !vocab.contains(UNK) {
            return Err(Error::param("vocab", "must contain EOS and UNK"));
        }
        let mut counts = HashMap::new();
        let mut context_totals = HashMap::new();
        for entry in file.counts {
            if entry.context.len() != file.order - 1 {
                return Err(Error::param(
                    "counts",
                    "context length does not match order",
                ));
            }
            if entry.next.values().any(|&c| c == 0) || entry.next.keys().any(|t| !vocab.contains(t))
            {
                return Err(Error::param(
                    "counts",
                    "counts must be >= 1 and over the vocabulary",
                ));
            }
            context_totals.insert(entry.context.clone(), entry.next.values().sum());
            counts.insert(entry.context, entry.next.into_iter().collect());
        }
        Ok(NGramLm {
            order: file.order,
            k: file.k,
            vocab,
            counts,
            context_totals,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ContextCounts {
    context: Vec<String>,
    next: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct LmFile<T: Scalar> {
    order: usize,
    k: T,
    vocab: Vec<String>,
    counts: Vec<ContextCounts>,
}

/// Unconditional: the input sequence is ignored.
impl<T: Scalar> ConditionalScorer<T> for NGramLm<T> {
    fn force_decode(
        &self,
        _input: &TokenSequence,
        output: &TokenSequence,
    ) -> Result<ForceDecodeResult<T>> {
        Ok(self.lm_log_prob(output))
    }
}
