use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{
    bootstrap_ci, pearson, BootstrapConfig, ConfidenceInterval, ScoreTable, SystemJudgment,
};
use crate::{Error, Result, Scalar};

/// Mean segment score per system.
pub fn system_means<T: Scalar>(scores: &ScoreTable<T>) -> BTreeMap<String, T> {
    let mut acc: BTreeMap<String, (T, usize)> = BTreeMap::new();
    for (_, system, v) in scores.iter() {
        let e = acc.entry(system.to_string()).or_insert((T::zero(), 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, sum / T::from_count(n)))
        .collect()
}

/// The `k` systems with the highest human score (ties broken by name).
pub fn top_k_systems<T: Scalar>(human: &[SystemJudgment<T>], k: usize) -> Vec<SystemJudgment<T>> {
    let mut sorted = human.to_vec();
    sorted.sort_by(|a, b| {
        b.human_score
            .partial_cmp(&a.human_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.system.cmp(&b.system))
    });
    sorted.truncate(k);
    sorted
}

/// Pearson r between metric system means and human scores, over the judged systems.
pub fn system_pearson<T: Scalar>(
    means: &BTreeMap<String, T>,
    human: &[SystemJudgment<T>],
) -> Result<T> {
    let mut xs = Vec::with_capacity(human.len());
    let mut ys = Vec::with_capacity(human.len());
    for h in human {
        let m = means.get(&h.system).ok_or_else(|| Error::MissingScore {
            seg_id: "*".into(),
            system: h.system.clone(),
        })?;
        xs.push(*m);
        ys.push(h.human_score);
    }
    pearson(&xs, &ys)
}

/// Bootstrap interval for system-level Pearson, resampling test-set segments.
/// Systems are never resampled.
pub fn system_bootstrap<T: Scalar>(
    scores: &ScoreTable<T>,
    human: &[SystemJudgment<T>],
    cfg: &BootstrapConfig,
) -> Result<ConfidenceInterval<T>> {
    let judged: BTreeSet<&str> = human.iter().map(|h| h.system.as_str()).collect();
    let mut by_seg: BTreeMap<&str, HashMap<&str, T>> = BTreeMap::new();
    for (seg, system, v) in scores.iter() {
        if judged.contains(system) {
            by_seg.entry(seg).or_default().insert(system, v);
        }
    }
    let segments: Vec<HashMap<&str, T>> = by_seg.into_values().collect();
    bootstrap_ci(
        &segments,
        |sample| {
            let mut acc: HashMap<&str, (T, usize)> = HashMap::new();
            for seg in sample {
                for (&system, &v) in seg.iter() {
                    let e = acc.entry(system).or_insert((T::zero(), 0));
                    e.0 += v;
                    e.1 += 1;
                }
            }
            let means: BTreeMap<String, T> = acc
                .into_iter()
                .map(|(k, (s, n))| (k.to_string(), s / T::from_count(n)))
                .collect();
            system_pearson(&means, human)
        },
        cfg,
    )
}
