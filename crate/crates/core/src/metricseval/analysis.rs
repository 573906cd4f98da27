use std::collections::HashMap;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{kendall_darr, RelativeRanking, ScoreTable};
use crate::baselines::{corpus_bleu, BleuConfig};
use crate::copymodel::CopyChannelModel;
use crate::scoring::{avg_log_prob, combine_directional, seq_log_prob, ForceDecodeResult};
use crate::text::TokenSequence;
use crate::{Error, Result, Scalar};

/// Length-normalized (`H`) or raw (`G`) sequence scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    H,
    G,
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Normalization::H),
            "G" | "g" => Ok(Normalization::G),
            other => Err(Error::param(
                "normalization",
                format!("expected H or G, got {other:?}"),
            )),
        }
    }
}

impl Normalization {
    pub fn apply<T: Scalar>(self, r: &ForceDecodeResult<T>) -> T {
        match self {
            Normalization::H => avg_log_prob(r),
            Normalization::G => seq_log_prob(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SweepResult<T: Scalar> {
    pub normalization: Normalization,
    /// `(w, tau)` for `w = 0, step, 2 step, ..., 1`.
    pub curve: Vec<(T, T)>,
    pub best_weight: T,
    pub best_tau: T,
}

/// Kendall tau of `w * fwd + (1 - w) * rev` over a uniform grid of weights.
///
/// `fwd` and `rev` hold the forced-decoding results per `(seg_id, system)`.
/// Among weights with the highest tau the one closest to 0.5 wins.
pub fn weight_sweep<T: Scalar>(
    fwd: &HashMap<(String, String), ForceDecodeResult<T>>,
    rev: &HashMap<(String, String), ForceDecodeResult<T>>,
    normalization: Normalization,
    grid_step: T,
    judgments: &[RelativeRanking],
) -> Result<SweepResult<T>> {
    if grid_step.is_nan() || grid_step <= T::zero() || grid_step > T::one() {
        return Err(Error::param(
            "grid_step",
            format!("{grid_step} not in (0, 1]"),
        ));
    }
    let steps = (T::one() / grid_step).round();
    if (steps * grid_step - T::one()).abs() > T::lit(1e-6) {
        return Err(Error::param(
            "grid_step",
            format!("{grid_step} does not divide 1"),
        ));
    }
    let steps = steps.to_usize().expect("small grid");

    let normalize = |table: &HashMap<(String, String), ForceDecodeResult<T>>| -> ScoreTable<T> {
        table
            .iter()
            .map(|((s, y), r)| (s.clone(), y.clone(), normalization.apply(r)))
            .collect()
    };
    let (f, r) = (normalize(fwd), normalize(rev));
    // only the scored pairs referenced by judgments matter
    let mut needed: Vec<(&str, &str)> = Vec::new();
    for j in judgments {
        needed.push((&j.seg_id, &j.better));
        needed.push((&j.seg_id, &j.worse));
    }
    let mut pairs = Vec::with_capacity(needed.len());
    for (seg, sys) in needed {
        pairs.push((seg, sys, f.get(seg, sys)?, r.get(seg, sys)?));
    }

    let mut curve = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let w = T::from_count(i) / T::from_count(steps);
        let combined: ScoreTable<T> = pairs
            .iter()
            .map(|&(s, y, a, b)| (s.to_string(), y.to_string(), combine_directional(w, a, b)))
            .collect();
        curve.push((w, kendall_darr(&combined, judgments)?));
    }
    let half = T::lit(0.5);
    let (best_weight, best_tau) = curve
        .iter()
        .copied()
        .reduce(|best, cand| {
            let closer = (cand.0 - half).abs() < (best.0 - half).abs();
            if cand.1 > best.1 || (cand.1 == best.1 && closer) {
                cand
            } else {
                best
            }
        })
        .expect("grid has at least two points");
    Ok(SweepResult {
        normalization,
        curve,
        best_weight,
        best_tau,
    })
}

/// One uniform-width sentence-BLEU bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasBin<T: Scalar> {
    pub lo: T,
    pub hi: T,
    pub count: usize,
    pub total: usize,
    /// `None` for empty bins.
    pub mean_h: Option<T>,
}

impl<T: Scalar> BiasBin<T> {
    /// Exact share of the data in this bin.
    pub fn fraction(&self) -> Ratio<u64> {
        if self.total == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(self.count as u64, self.total as u64)
        }
    }

    pub fn fraction_f64(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count as f64 / self.total as f64
        }
    }
}

/// Mean H per sentence-BLEU bin. Bins split `[0, 100]` uniformly; the last bin
/// is closed on the right so that 100 falls inside it.
pub fn bias_bins<T: Scalar>(
    h_values: &[T],
    sbleu_values: &[T],
    n_bins: usize,
) -> Result<Vec<BiasBin<T>>> {
    if h_values.len() != sbleu_values.len() {
        return Err(Error::param(
            "bias_bins",
            format!(
                "{} H values vs {} sentBLEU values",
                h_values.len(),
                sbleu_values.len()
            ),
        ));
    }
    if n_bins == 0 {
        return Err(Error::param("n_bins", "must be at least 1"));
    }
    let hundred = T::lit(100.0);
    let mut sums = vec![T::zero(); n_bins];
    let mut counts = vec![0usize; n_bins];
    for (i, (&h, &b)) in h_values.iter().zip(sbleu_values).enumerate() {
        if !(b >= T::zero() && b <= hundred) {
            return Err(Error::param(
                "sbleu",
                format!("value {b} at index {i} outside [0, 100]"),
            ));
        }
        let idx = (b * T::from_count(n_bins) / hundred)
            .floor()
            .to_usize()
            .expect("non-negative")
            .min(n_bins - 1);
        sums[idx] += h;
        counts[idx] += 1;
    }
    let total = h_values.len();
    let width = hundred / T::from_count(n_bins);
    Ok((0..n_bins)
        .map(|i| BiasBin {
            lo: width * T::from_count(i),
            hi: if i + 1 == n_bins {
                hundred
            } else {
                width * T::from_count(i + 1)
            },
            count: counts[i],
            total,
            mean_h: (counts[i] > 0).then(|| sums[i] / T::from_count(counts[i])),
        })
        .collect())
}

/// Averages of H for the beam-search output (`BS`), a copy of the input (`r0`)
/// and an optional human paraphrase (`r1`), all conditioned on `r0`, plus
/// corpus BLEU of `BS` against `r0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct CopyVsBeamReport<T: Scalar> {
    pub segments: usize,
    pub skipped: usize,
    pub beam_width: usize,
    pub h_bs_given_r0: T,
    pub h_r0_given_r0: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_r1_given_r0: Option<T>,
    pub bleu_bs_r0: T,
    /// Beam output per input, `None` where the segment was skipped.
    #[serde(skip)]
    pub outputs: Vec<Option<TokenSequence>>,
}

/// Beam length limit for an input of `n` tokens.
pub fn default_max_len(n: usize) -> usize {
    2 * n + 4
}

pub fn copy_vs_beam_report<T: Scalar>(
    model: &CopyChannelModel<T>,
    r0: &[TokenSequence],
    r1: Option<&[TokenSequence]>,
    beam_width: usize,
    bleu: &BleuConfig,
) -> Result<CopyVsBeamReport<T>> {
    if r0.is_empty() {
        return Err(Error::Empty("inputs"));
    }
    if let Some(r1) = r1 {
        if r1.len() != r0.len() {
            return Err(Error::param(
                "r1",
                format!("{} paraphrases for {} inputs", r1.len(), r0.len()),
            ));
        }
    }
    struct Row<T: Scalar> {
        bs: TokenSequence,
        h_bs: T,
        h_copy: T,
        h_r1: Option<T>,
    }
    let score = |i: usize| -> Result<Row<T>> {
        let x = &r0[i];
        let bs = model
            .beam_search(x, beam_width, default_max_len(x.len()))?
            .sequence;
        let h_bs = avg_log_prob(&model.force_decode_copy(x, &bs)?);
        let h_copy = avg_log_prob(&model.force_decode_copy(x, x)?);
        let h_r1 = match r1 {
            Some(r1) => Some(avg_log_prob(&model.force_decode_copy(x, &r1[i])?)),
            None => None,
        };
        Ok(Row {
            bs,
            h_bs,
            h_copy,
            h_r1,
        })
    };

    let rows: Vec<Option<Row<T>>> = (0..r0.len()).map(|i| score(i).ok()).collect();
    let kept: Vec<(usize, &Row<T>)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().map(|r| (i, r)))
        .collect();
    if kept.is_empty() {
        return Err(Error::Empty("successfully decoded segments"));
    }
    let n = T::from_count(kept.len());
    let mean = |f: &dyn Fn(&Row<T>) -> T| kept.iter().map(|(_, r)| f(r)).sum::<T>() / n;
    let bleu_bs_r0 = corpus_bleu(kept.iter().map(|(i, r)| (&r.bs, &r0[*i])), bleu)?;
    Ok(CopyVsBeamReport {
        segments: r0.len(),
        skipped: r0.len() - kept.len(),
        beam_width,
        h_bs_given_r0: mean(&|r| r.h_bs),
        h_r0_given_r0: mean(&|r| r.h_copy),
        h_r1_given_r0: r1.map(|_| mean(&|r| r.h_r1.expect("r1 scored"))),
        bleu_bs_r0,
        outputs: rows.into_iter().map(|r| r.map(|r| r.bs)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copymodel::ChannelParams;
    use crate::text::Lang;

    fn fdr(v: &[f64]) -> ForceDecodeResult<f64> {
        ForceDecodeResult::new(v.to_vec()).unwrap()
    }

    fn key(s: &str, y: &str) -> (String, String) {
        (s.to_string(), y.to_string())
    }

    fn judgments() -> Vec<RelativeRanking> {
        (0..4)
            .map(|i| RelativeRanking::new(i.to_string(), "good", "bad").unwrap())
            .collect()
    }

    #[test]
    fn identical_directions_give_flat_curve() {
        let mut fwd = HashMap::new();
        for i in 0..4 {
            fwd.insert(key(&i.to_string(), "good"), fdr(&[-0.1, -0.2]));
            fwd.insert(key(&i.to_string(), "bad"), fdr(&[-0.5, -0.2]));
        }
        let res = weight_sweep(&fwd, &fwd, Normalization::H, 0.05, &judgments()).unwrap();
        assert_eq!(res.curve.len(), 21);
        assert!(res.curve.iter().all(|&(_, t)| t == 1.0));
        assert_eq!(res.best_weight, 0.5);
    }

    #[test]
    fn forward_only_signal_peaks_at_one() {
        let mut fwd = HashMap::new();
        let mut rev = HashMap::new();
        for i in 0..4 {
            let s = i.to_string();
            fwd.insert(key(&s, "good"), fdr(&[-0.1]));
            fwd.insert(key(&s, "bad"), fdr(&[-0.2]));
            // reverse direction is anti-concordant and much stronger
            rev.insert(key(&s, "good"), fdr(&[-5.0]));
            rev.insert(key(&s, "bad"), fdr(&[-1.0]));
        }
        let res = weight_sweep(&fwd, &rev, Normalization::G, 0.05, &judgments()).unwrap();
        assert_eq!(res.best_weight, 1.0);
        assert_eq!(res.best_tau, 1.0);
        assert_eq!(res.curve[0].1, -1.0);
    }

    #[test]
    fn grid_step_must_divide_one() {
        let t = HashMap::new();
        assert!(weight_sweep::<f64>(&t, &t, Normalization::H, 0.3, &[]).is_err());
        assert!(weight_sweep::<f64>(&t, &t, Normalization::H, 0.0, &[]).is_err());
    }

    #[test]
    fn normalization_differs() {
        let r = fdr(&[-1.0, -1.0, -1.0, -1.0]);
        assert_eq!(Normalization::G.apply(&r), -4.0);
        assert_eq!(Normalization::H.apply(&r), -1.0);
    }

    #[test]
    fn copies_land_in_top_bin() {
        let h = vec![-0.1; 20];
        let b = vec![100.0; 20];
        let bins = bias_bins(&h, &b, 10).unwrap();
        assert_eq!(bins[9].count, 20);
        assert_eq!(bins[9].fraction(), Ratio::from_integer(1));
        assert!(bins[..9].iter().all(|b| b.mean_h.is_none()));
    }

    #[test]
    fn bin_edges() {
        let bins = bias_bins(&[-1.0, -2.0, -3.0], &[0.0, 10.0, 99.99], 10).unwrap();
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[1].count, 1);
        assert_eq!(bins[9].count, 1);
        assert_eq!((bins[1].lo, bins[1].hi), (10.0, 20.0));
        let total: Ratio<u64> = bins.iter().map(|b| b.fraction()).sum();
        assert_eq!(total, Ratio::from_integer(1));
        assert!(bias_bins(&[0.0], &[101.0], 10).is_err());
        assert!(bias_bins(&[0.0], &[], 10).is_err());
    }

    #[test]
    fn copy_vs_beam_on_tiny_fixture() {
        let lang = Lang::new("xx").unwrap();
        let model =
            CopyChannelModel::<f64>::uniform(["a", "b", "c"], ChannelParams::default()).unwrap();
        let r0: Vec<TokenSequence> = ["a b c", "c a", "b"]
            .iter()
            .map(|s| TokenSequence::new(s.split_whitespace(), lang.clone()))
            .collect();
        let rep = copy_vs_beam_report(&model, &r0, None, 5, &BleuConfig::default()).unwrap();
        assert_eq!(rep.skipped, 0);
        assert!((rep.h_bs_given_r0 - rep.h_r0_given_r0).abs() < 1e-12);
        assert!((rep.bleu_bs_r0 - 100.0).abs() < 1e-9);
        assert!(rep.h_r1_given_r0.is_none());

        let r1: Vec<TokenSequence> = ["a c", "c a b", "zzz"]
            .iter()
            .map(|s| TokenSequence::new(s.split_whitespace(), lang.clone()))
            .collect();
        let rep = copy_vs_beam_report(&model, &r0, Some(&r1), 5, &BleuConfig::default()).unwrap();
        // "zzz" is out of vocabulary, so the third segment is skipped
        assert_eq!(rep.skipped, 1);
        assert!(rep.h_r1_given_r0.unwrap() < rep.h_r0_given_r0);
    }
}
