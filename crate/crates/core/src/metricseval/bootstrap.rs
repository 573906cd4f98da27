use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConfidenceInterval<T: Scalar> {
    pub lo: T,
    pub hi: T,
    pub level: f64,
    pub resamples: usize,
}

impl<T: Scalar> ConfidenceInterval<T> {
    pub fn overlaps(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }
}

/// Linear interpolation between order statistics (the usual "type 7" quantile).
fn quantile<T: Scalar>(sorted: &[T], p: f64) -> T {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval for `statistic` over `data`.
///
/// Resample `b` draws `data.len()` indices uniformly with replacement from a
/// ChaCha8 stream seeded with `seed` on stream `b`, so results do not depend on
/// scheduling. A resample on which the statistic fails is redrawn from the
/// same stream; more than `10 * resamples` attempts in total is an error.
pub fn bootstrap_ci<T, D, F>(
    data: &[D],
    statistic: F,
    cfg: &BootstrapConfig,
) -> Result<ConfidenceInterval<T>>
where
    T: Scalar,
    D: Sync,
    F: Fn(&[&D]) -> Result<T> + Sync,
{
    if data.is_empty() {
        return Err(Error::Empty("bootstrap data"));
    }
    if cfg.resamples == 0 {
        return Err(Error::param("resamples", "must be at least 1"));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::param(
            "level",
            format!("{} not in (0, 1)", cfg.level),
        ));
    }
    let budget = 10 * cfg.resamples;
    let outcomes: Vec<(Result<T>, usize)> = (0..cfg.resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let mut sample: Vec<&D> = Vec::with_capacity(data.len());
            let mut attempts = 0;
            loop {
                attempts += 1;
                sample.clear();
                sample.extend((0..data.len()).map(|_| &data[rng.gen_range(0..data.len())]));
                match statistic(&sample) {
                    Ok(v) => return (Ok(v), attempts),
                    Err(e) if attempts >= budget => return (Err(e), attempts),
                    Err(_) => {}
                }
            }
        })
        .collect();

    let attempts: usize = outcomes.iter().map(|(_, a)| a).sum();
    let mut values = Vec::with_capacity(cfg.resamples);
    for (outcome, _) in outcomes {
        values.push(outcome.map_err(|e| Error::BootstrapExhausted {
            attempts,
            last: e.to_string(),
        })?);
    }
    if attempts > budget {
        return Err(Error::BootstrapExhausted {
            attempts,
            last: "attempt budget exceeded".into(),
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let alpha = (1.0 - cfg.level) / 2.0;
    Ok(ConfidenceInterval {
        lo: quantile(&values, alpha),
        hi: quantile(&values, 1.0 - alpha),
        level: cfg.level,
        resamples: cfg.resamples,
    })
}

/// The top-scoring metric(s) plus every metric whose interval overlaps the
/// interval of a metric already in the group, repeated until nothing changes.
pub fn significance_groups<T: Scalar>(
    intervals: &BTreeMap<String, ConfidenceInterval<T>>,
    point: &BTreeMap<String, T>,
) -> Result<BTreeSet<String>> {
    if point.is_empty() {
        return Err(Error::Empty("metric set"));
    }
    if intervals.keys().ne(point.keys()) {
        return Err(Error::param(
            "significance",
            "interval and point-estimate keys differ",
        ));
    }
    let best = point
        .values()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let mut group: BTreeSet<String> = point
        .iter()
        .filter(|(_, &v)| v == best)
        .map(|(k, _)| k.clone())
        .collect();
    loop {
        let added: Vec<String> = intervals
            .iter()
            .filter(|(k, ci)| {
                !group.contains(*k) && group.iter().any(|g| intervals[g].overlaps(ci))
            })
            .map(|(k, _)| k.clone())
            .collect();
        if added.is_empty() {
            return Ok(group);
        }
        group.extend(added);
    }
}
