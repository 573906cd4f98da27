use std::collections::BTreeMap;
use std::io::Write;

use anyhow::{Context, Result};
use prismkit::metricseval::{
    bootstrap_ci, darr_concordance, read_darr, read_system_judgments, significance_groups,
    system_bootstrap, system_means, system_pearson, tau_from_concordance, top_k_systems,
    BootstrapConfig, ScoreTable,
};
use prismkit::Interval;
use serde::Serialize;

use super::{open, read_scores};
use crate::output::{manifest_path, RunManifest, Staging};
use crate::{usage, EvalArgs, EvalLevel};

#[derive(Serialize)]
struct MetricResult {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci: Option<Interval>,
}

#[derive(Serialize)]
struct Report {
    level: EvalLevel,
    statistic: &'static str,
    judgments: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    systems: Option<Vec<String>>,
    metrics: BTreeMap<String, MetricResult>,
    /// Metrics not significantly worse than the best one.
    #[serde(skip_serializing_if = "Option::is_none")]
    significance: Option<Vec<String>>,
}

fn malformed_error(path: &std::path::Path, rows: &[(usize, String)]) -> Result<()> {
    if rows.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = rows
        .iter()
        .map(|(l, r)| format!("  line {l}: {r}"))
        .collect();
    usage!(
        "{} malformed judgment row(s) in {}:\n{}",
        rows.len(),
        path.display(),
        list.join("\n")
    )
}

pub fn run(a: EvalArgs) -> Result<()> {
    let cfg = BootstrapConfig {
        resamples: a.bootstrap,
        level: a.confidence,
        seed: a.seed,
    };
    if a.top_k.is_some() && a.level == EvalLevel::Segment {
        usage!("--top-k applies to --level system only");
    }
    let mut records = Vec::new();
    for p in &a.scores {
        records.extend(read_scores(p)?);
    }
    let tables = ScoreTable::by_metric(&records);
    if tables.is_empty() {
        usage!("no scores found in the --scores files");
    }

    let mut metrics = BTreeMap::new();
    let (judgments, systems) = match a.level {
        EvalLevel::Segment => {
            let parsed = read_darr(open(&a.judgments)?)?;
            malformed_error(&a.judgments, &parsed.malformed)?;
            for (name, table) in &tables {
                let flags = darr_concordance(table, &parsed.rows)
                    .with_context(|| format!("metric {name}"))?;
                let value = tau_from_concordance::<f64, _>(&flags)?;
                let ci = (a.bootstrap > 0)
                    .then(|| bootstrap_ci(&flags, |s| tau_from_concordance::<f64, _>(s), &cfg))
                    .transpose()
                    .with_context(|| format!("bootstrap for {name}"))?;
                metrics.insert(name.clone(), MetricResult { value, ci });
            }
            (parsed.rows.len(), None)
        }
        EvalLevel::System => {
            let parsed = read_system_judgments::<f64>(open(&a.judgments)?)?;
            malformed_error(&a.judgments, &parsed.malformed)?;
            let human = match a.top_k {
                Some(k) if k < 2 => usage!("--top-k must be at least 2 for a correlation"),
                Some(k) => top_k_systems(&parsed.rows, k),
                None => parsed.rows.clone(),
            };
            for (name, table) in &tables {
                let value = system_pearson(&system_means(table), &human)
                    .with_context(|| format!("metric {name}"))?;
                let ci = (a.bootstrap > 0)
                    .then(|| system_bootstrap(table, &human, &cfg))
                    .transpose()
                    .with_context(|| format!("bootstrap for {name}"))?;
                metrics.insert(name.clone(), MetricResult { value, ci });
            }
            (
                parsed.rows.len(),
                Some(human.into_iter().map(|h| h.system).collect()),
            )
        }
    };

    let significance = if a.bootstrap > 0 {
        let intervals: BTreeMap<String, Interval> = metrics
            .iter()
            .map(|(k, m)| (k.clone(), m.ci.expect("bootstrap ran")))
            .collect();
        let point: BTreeMap<String, f64> =
            metrics.iter().map(|(k, m)| (k.clone(), m.value)).collect();
        Some(
            significance_groups(&intervals, &point)?
                .into_iter()
                .collect(),
        )
    } else {
        None
    };
    let report = Report {
        level: a.level,
        statistic: match a.level {
            EvalLevel::Segment => "kendall_tau_darr",
            EvalLevel::System => "pearson",
        },
        judgments,
        systems,
        metrics,
        significance,
    };

    match &a.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &report)?;
            writeln!(stdout)?;
            Ok(())
        }
        Some(out) => {
            let mut manifest = RunManifest::new("eval", cfg)?;
            manifest.seed = Some(a.seed);
            manifest.inputs = a.scores.clone();
            manifest.inputs.push(a.judgments.clone());
            manifest.outputs = vec![out.clone()];
            let mut staging = Staging::new();
            staging.write_json(out, &report)?;
            staging.write_json(&manifest_path(out), &manifest)?;
            staging.commit()
        }
    }
}
