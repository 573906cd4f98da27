//! WMT-style metric evaluation: segment-level Kendall tau over relative
//! rankings, system-level Pearson, bootstrap confidence intervals and the
//! analyses built on them.

mod analysis;
mod bootstrap;
mod io;
mod stats;
mod system;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scoring::ScoreRecord;
use crate::{Error, Result, Scalar};

pub use analysis::{
    bias_bins, copy_vs_beam_report, default_max_len, weight_sweep, BiasBin, CopyVsBeamReport,
    Normalization, SweepResult,
};
pub use bootstrap::{bootstrap_ci, significance_groups, BootstrapConfig, ConfidenceInterval};
pub use io::{read_darr, read_system_judgments, ParsedRows};
pub use stats::{darr_concordance, kendall_darr, pearson, tau_from_concordance};
pub use system::{system_bootstrap, system_means, system_pearson, top_k_systems};

/// One human relative-ranking judgment: on `seg_id`, `better` beat `worse`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelativeRanking {
    pub seg_id: String,
    pub better: String,
    pub worse: String,
}

impl RelativeRanking {
    pub fn new(
        seg_id: impl Into<String>,
        better: impl Into<String>,
        worse: impl Into<String>,
    ) -> Result<Self> {
        let (better, worse) = (better.into(), worse.into());
        if better == worse {
            return Err(Error::param(
                "judgment",
                format!("system {better:?} compared with itself"),
            ));
        }
        Ok(RelativeRanking {
            seg_id: seg_id.into(),
            better,
            worse,
        })
    }
}

/// Mean human score of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SystemJudgment<T: Scalar> {
    pub system: String,
    pub human_score: T,
}

/// Metric scores keyed by `(seg_id, system)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable<T: Scalar> {
    values: HashMap<(String, String), T>,
}

impl<T: Scalar> Default for ScoreTable<T> {
    fn default() -> Self {
        ScoreTable {
            values: HashMap::new(),
        }
    }
}

impl<T: Scalar> ScoreTable<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, seg_id: impl Into<String>, system: impl Into<String>, value: T) {
        self.values.insert((seg_id.into(), system.into()), value);
    }

    pub fn get(&self, seg_id: &str, system: &str) -> Result<T> {
        self.values
            .get(&(seg_id.to_string(), system.to_string()))
            .copied()
            .ok_or_else(|| Error::MissingScore {
                seg_id: seg_id.to_string(),
                system: system.to_string(),
            })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, T)> {
        self.values
            .iter()
            .map(|((s, y), &v)| (s.as_str(), y.as_str(), v))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ScoreTable {
            values: self
                .values
                .iter()
                .map(|(k, &v)| (k.clone(), f(v)))
                .collect(),
        }
    }

    /// Splits score records into one table per metric name.
    pub fn by_metric(
        records: &[ScoreRecord<T>],
    ) -> std::collections::BTreeMap<String, ScoreTable<T>> {
        let mut out: std::collections::BTreeMap<String, ScoreTable<T>> = Default::default();
        for r in records {
            out.entry(r.metric.clone()).or_default().insert(
                r.seg_id.clone(),
                r.system.clone(),
                r.value,
            );
        }
        out
    }
}

impl<T: Scalar> FromIterator<(String, String, T)> for ScoreTable<T> {
    fn from_iter<I: IntoIterator<Item = (String, String, T)>>(iter: I) -> Self {
        ScoreTable {
            values: iter.into_iter().map(|(s, y, v)| ((s, y), v)).collect(),
        }
    }
}
