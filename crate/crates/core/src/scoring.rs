//! Force-decoding scores and the metrics built from them.
//!
//! `G(y|x)` is the sum of the per-token log probabilities of `y` given `x`
//! (EOS included), `H(y|x)` is `G` divided by the number of scored positions.
//! `prism_ref` averages `H(sys|ref)` and `H(ref|sys)`, `prism_src` is
//! `H(sys|src)`. All logs are natural logs.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::text::{Lang, TokenSequence};
use crate::{Error, Result, Scalar};

/// A model assigning `log p(y_t | y_<t, x)` to every token of `y` plus a final EOS.
///
/// Implementations must be deterministic and shareable across threads.
pub trait ConditionalScorer<T: Scalar>: Send + Sync {
    fn force_decode(
        &self,
        input: &TokenSequence,
        output: &TokenSequence,
    ) -> Result<ForceDecodeResult<T>>;
}

impl<T: Scalar, S: ConditionalScorer<T> + ?Sized> ConditionalScorer<T> for &S {
    fn force_decode(
        &self,
        input: &TokenSequence,
        output: &TokenSequence,
    ) -> Result<ForceDecodeResult<T>> {
        (**self).force_decode(input, output)
    }
}

/// Per-token log probabilities of a forced output; the last entry is EOS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ForceDecodeResult<T: Scalar> {
    token_log_probs: Vec<T>,
}

impl<T: Scalar> ForceDecodeResult<T> {
    pub fn new(token_log_probs: Vec<T>) -> Result<Self> {
        if token_log_probs.is_empty() {
            return Err(Error::Empty("token log probabilities"));
        }
        if let Some((i, v)) = token_log_probs
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v > T::zero())
        {
            return Err(Error::param(
                "token_log_probs",
                format!("entry {i} is {v}; log probabilities must be finite and <= 0"),
            ));
        }
        Ok(ForceDecodeResult { token_log_probs })
    }

    pub fn token_log_probs(&self) -> &[T] {
        &self.token_log_probs
    }

    /// Scored positions, EOS included.
    pub fn output_len(&self) -> usize {
        self.token_log_probs.len()
    }

    pub fn eos_log_prob(&self) -> T {
        *self.token_log_probs.last().expect("non-empty")
    }
}

/// A scorer that gives every token probability one.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityScorer;

impl<T: Scalar> ConditionalScorer<T> for IdentityScorer {
    fn force_decode(
        &self,
        _input: &TokenSequence,
        output: &TokenSequence,
    ) -> Result<ForceDecodeResult<T>> {
        ForceDecodeResult::new(vec![T::zero(); output.len() + 1])
    }
}

/// Force-decodes `output` given `input`, conditioning on `target_lang`.
///
/// The language tag is a conditioning symbol only; it never receives a score.
pub fn force_decode<T: Scalar, S: ConditionalScorer<T> + ?Sized>(
    scorer: &S,
    input: &TokenSequence,
    output: &TokenSequence,
    target_lang: &Lang,
) -> Result<ForceDecodeResult<T>> {
    if &output.lang != target_lang {
        return Err(Error::LangMismatch {
            expected: target_lang.to_string(),
            found: output.lang.to_string(),
        });
    }
    let result = scorer.force_decode(input, output)?;
    if result.output_len() != output.len() + 1 {
        return Err(Error::Scorer(format!(
            "scorer returned {} log probabilities for {} tokens plus EOS",
            result.output_len(),
            output.len()
        )));
    }
    Ok(result)
}

/// G: sequence-level log probability.
pub fn seq_log_prob<T: Scalar>(r: &ForceDecodeResult<T>) -> T {
    r.token_log_probs.iter().copied().sum()
}

/// H: average token-level log probability.
pub fn avg_log_prob<T: Scalar>(r: &ForceDecodeResult<T>) -> T {
    seq_log_prob(r) / T::from_count(r.output_len())
}

/// `w * fwd + (1 - w) * rev`.
pub fn combine_directional<T: Scalar>(w: T, fwd: T, rev: T) -> T {
    w * fwd + (T::one() - w) * rev
}

/// Both directions used by `prism_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefDirections<T: Scalar> {
    pub sys_given_ref: ForceDecodeResult<T>,
    pub ref_given_sys: ForceDecodeResult<T>,
}

impl<T: Scalar> RefDirections<T> {
    pub fn prism_ref(&self) -> T {
        combine_directional(
            T::lit(0.5),
            avg_log_prob(&self.sys_given_ref),
            avg_log_prob(&self.ref_given_sys),
        )
    }
}

pub fn score_ref_directions<T: Scalar, S: ConditionalScorer<T> + ?Sized>(
    scorer: &S,
    sys: &TokenSequence,
    reference: &TokenSequence,
) -> Result<RefDirections<T>> {
    if sys.lang != reference.lang {
        return Err(Error::LangMismatch {
            expected: reference.lang.to_string(),
            found: sys.lang.to_string(),
        });
    }
    Ok(RefDirections {
        sys_given_ref: force_decode(scorer, reference, sys, &sys.lang)?,
        ref_given_sys: force_decode(scorer, sys, reference, &reference.lang)?,
    })
}

/// ½ H(sys|ref) + ½ H(ref|sys).
pub fn prism_ref<T: Scalar, S: ConditionalScorer<T> + ?Sized>(
    scorer: &S,
    sys: &TokenSequence,
    reference: &TokenSequence,
) -> Result<T> {
    Ok(score_ref_directions(scorer, sys, reference)?.prism_ref())
}

/// H(sys|src). The source may be in a different language.
pub fn prism_src<T: Scalar, S: ConditionalScorer<T> + ?Sized>(
    scorer: &S,
    sys: &TokenSequence,
    src: &TokenSequence,
) -> Result<T> {
    Ok(avg_log_prob(&force_decode(scorer, src, sys, &sys.lang)?))
}

/// H of `sys` under an unconditional scorer (called with an empty input).
pub fn lm_score<T: Scalar, S: ConditionalScorer<T> + ?Sized>(
    lm: &S,
    sys: &TokenSequence,
) -> Result<T> {
    let empty = TokenSequence::empty(sys.lang.clone());
    Ok(avg_log_prob(&force_decode(lm, &empty, sys, &sys.lang)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SegmentScore<T: Scalar> {
    pub seg_id: String,
    pub system: String,
    pub value: T,
}

/// Mean of the segment scores of one system.
pub fn system_score<T: Scalar>(segment_scores: &[SegmentScore<T>]) -> Result<T> {
    if segment_scores.is_empty() {
        return Err(Error::Empty("segment score list"));
    }
    let sum: T = segment_scores.iter().map(|s| s.value).sum();
    Ok(sum / T::from_count(segment_scores.len()))
}

/// One line of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ScoreRecord<T: Scalar> {
    pub seg_id: String,
    pub system: String,
    pub metric: String,
    pub value: T,
}

pub fn write_scores_jsonl<T: Scalar>(mut w: impl Write, records: &[ScoreRecord<T>]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// TSV mirror: `seg_id \t system \t metric \t value`, no header.
pub fn write_scores_tsv<T: Scalar>(mut w: impl Write, records: &[ScoreRecord<T>]) -> Result<()> {
    for r in records {
        let value = serde_json::to_string(&r.value)?;
        writeln!(w, "{}\t{}\t{}\t{}", r.seg_id, r.system, r.metric, value)?;
    }
    Ok(())
}

pub fn read_scores_jsonl<T: Scalar>(r: impl BufRead) -> Result<Vec<ScoreRecord<T>>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord<T> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if !rec.value.is_finite() {
            return Err(Error::Parse {
                line: i + 1,
                reason: "score value is not finite".into(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_scores_tsv<T: Scalar>(r: impl BufRead) -> Result<Vec<ScoreRecord<T>>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |reason: String| Error::Parse {
            line: i + 1,
            reason,
        };
        if fields.len() != 4 {
            return Err(bad(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let value = fields[3]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .and_then(T::from_f64)
            .ok_or_else(|| bad(format!("bad score value {:?}", fields[3])))?;
        out.push(ScoreRecord {
            seg_id: fields[0].to_string(),
            system: fields[1].to_string(),
            metric: fields[2].to_string(),
            value,
        });
    }
    Ok(out)
}

/// Which conditional a precomputed log-probability row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "sys|ref")]
    SysGivenRef,
    #[serde(rename = "ref|sys")]
    RefGivenSys,
    #[serde(rename = "sys|src")]
    SysGivenSrc,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::SysGivenRef => "sys|ref",
            Direction::RefGivenSys => "ref|sys",
            Direction::SysGivenSrc => "sys|src",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sys|ref" => Ok(Direction::SysGivenRef),
            "ref|sys" => Ok(Direction::RefGivenSys),
            "sys|src" => Ok(Direction::SysGivenSrc),
            other => Err(Error::param(
                "direction",
                format!("unknown direction {other:?}"),
            )),
        }
    }
}

/// One row of the precomputed backend input (and of log-prob dumps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LogProbRecord<T: Scalar> {
    pub seg_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub log_probs: Vec<T>,
}

pub fn read_logprob_records<T: Scalar>(r: impl BufRead) -> Result<Vec<LogProbRecord<T>>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogProbRecord<T> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        ForceDecodeResult::new(rec.log_probs.clone()).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_logprob_records<T: Scalar>(
    mut w: impl Write,
    records: &[LogProbRecord<T>],
) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Log probabilities computed elsewhere (e.g. by a large NMT model), keyed by
/// segment and direction.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedLogProbs<T: Scalar> {
    order: Vec<String>,
    rows: HashMap<(String, Direction), ForceDecodeResult<T>>,
}

impl<T: Scalar> PrecomputedLogProbs<T> {
    pub fn from_records(records: Vec<LogProbRecord<T>>) -> Result<Self> {
        let mut out = PrecomputedLogProbs {
            order: Vec::new(),
            rows: HashMap::new(),
        };
        let mut seen = std::collections::HashSet::new();
        for (i, rec) in records.into_iter().enumerate() {
            let direction = rec.direction.ok_or_else(|| Error::Parse {
                line: i + 1,
                reason: "missing direction".into(),
            })?;
            if seen.insert(rec.seg_id.clone()) {
                out.order.push(rec.seg_id.clone());
            }
            let key = (rec.seg_id, direction);
            if out.rows.contains_key(&key) {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!(
                        "duplicate row for segment {:?}, direction {}",
                        key.0, direction
                    ),
                });
            }
            out.rows.insert(key, ForceDecodeResult::new(rec.log_probs)?);
        }
        Ok(out)
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        Self::from_records(read_logprob_records(r)?)
    }

    /// Segment ids in order of first appearance.
    pub fn seg_ids(&self) -> &[String] {
        &self.order
    }

    pub fn get(&self, seg_id: &str, direction: Direction) -> Result<&ForceDecodeResult<T>> {
        self.rows
            .get(&(seg_id.to_string(), direction))
            .ok_or_else(|| Error::MissingLogProbs {
                seg_id: seg_id.to_string(),
                direction: direction.to_string(),
            })
    }

    pub fn prism_ref(&self, seg_id: &str) -> Result<T> {
        let fwd = avg_log_prob(self.get(seg_id, Direction::SysGivenRef)?);
        let rev = avg_log_prob(self.get(seg_id, Direction::RefGivenSys)?);
        Ok(combine_directional(T::lit(0.5), fwd, rev))
    }

    pub fn prism_src(&self, seg_id: &str) -> Result<T> {
        Ok(avg_log_prob(self.get(seg_id, Direction::SysGivenSrc)?))
    }
}
