use std::cmp::Ordering;

use super::{CopyChannelModel, Lattice};
use crate::text::TokenSequence;
use crate::{Error, Result, Scalar};

/// A terminated beam-search output with its total log probability (EOS included).
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<T: Scalar> {
    pub sequence: TokenSequence,
    pub log_prob: T,
}

struct Live<T> {
    tokens: Vec<usize>,
    score: T,
    alpha: Vec<T>,
}

struct Candidate<T> {
    parent: usize,
    token: usize,
    score: T,
}

impl<T: Scalar> CopyChannelModel<T> {
    /// Higher score first; equal scores go to the lexicographically smaller token sequence.
    fn rank(&self, a: (&[usize], T), b: (&[usize], T)) -> Ordering {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                let lhs = a.0.iter().map(|&i| self.vocab[i].as_str());
                let rhs = b.0.iter().map(|&i| self.vocab[i].as_str());
                lhs.cmp(rhs)
            })
    }

    /// Beam search under total sequence log probability, no length normalization.
    ///
    /// Outputs are at most `max_len` tokens long. The search stops as soon as
    /// the best terminated hypothesis scores at least as well as every live one,
    /// since extending a hypothesis can only lower its score.
    pub fn beam_search(
        &self,
        x: &TokenSequence,
        beam_width: usize,
        max_len: usize,
    ) -> Result<Hypothesis<T>> {
        if beam_width == 0 {
            return Err(Error::param("beam_width", "must be at least 1"));
        }
        let lat: Lattice<T> = self.lattice(self.encode(x, "input")?);
        let mut live = vec![Live {
            tokens: Vec::new(),
            score: T::zero(),
            alpha: Self::initial_alpha(lat.input.len()),
        }];
        let mut best: Option<(Vec<usize>, T)> = None;

        for step in 0..=max_len {
            let mut candidates = Vec::new();
            for (parent, hyp) in live.iter().enumerate() {
                let dist = self.distribution(&lat, &hyp.alpha);
                let finished = hyp.score + dist.eos.ln();
                let better = match &best {
                    None => true,
                    Some((tokens, score)) => {
                        self.rank((&hyp.tokens, finished), (tokens, *score)) == Ordering::Less
                    }
                };
                if better {
                    best = Some((hyp.tokens.clone(), finished));
                }
                if step < max_len {
                    for (token, &p) in dist.probs.iter().enumerate() {
                        if p > T::zero() {
                            candidates.push(Candidate {
                                parent,
                                token,
                                score: hyp.score + p.ln(),
                            });
                        }
                    }
                }
            }
            if candidates.is_empty() {
                break;
            }
            let key = |c: &Candidate<T>| {
                let mut tokens = live[c.parent].tokens.clone();
                tokens.push(c.token);
                tokens
            };
            let mut keyed: Vec<(Vec<usize>, &Candidate<T>)> =
                candidates.iter().map(|c| (key(c), c)).collect();
            keyed.sort_by(|a, b| self.rank((&a.0, a.1.score), (&b.0, b.1.score)));
            keyed.truncate(beam_width);

            if let Some((_, best_score)) = &best {
                if *best_score >= keyed[0].1.score {
                    break;
                }
            }
            live = keyed
                .into_iter()
                .map(|(tokens, c)| {
                    let (next, total) = self.step(&lat, &live[c.parent].alpha, c.token);
                    Live {
                        tokens,
                        score: c.score,
                        alpha: next.into_iter().map(|a| a / total).collect(),
                    }
                })
                .collect();
        }

        let (tokens, log_prob) = best.ok_or(Error::NoHypothesis { max_len })?;
        if !log_prob.is_finite() {
            return Err(Error::NoHypothesis { max_len });
        }
        Ok(Hypothesis {
            sequence: TokenSequence::new(
                tokens.iter().map(|&i| self.vocab[i].clone()),
                x.lang.clone(),
            ),
            log_prob,
        })
    }
}
