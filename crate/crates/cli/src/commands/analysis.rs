use std::collections::HashMap;
use std::path::Path;

use anyhow::{Context, Result};
use prismkit::metricseval::{bias_bins, read_darr, weight_sweep, Normalization};
use prismkit::scoring::{read_logprob_records, ForceDecodeResult};
use serde::Serialize;

use super::{open, read_scores};
use crate::output::{manifest_path, RunManifest, Staging};
use crate::{usage, BiasArgs, Norm, SweepArgs};

type DecodeTable = HashMap<(String, String), ForceDecodeResult<f64>>;

fn read_decodes(path: &Path) -> Result<DecodeTable> {
    let records = read_logprob_records::<f64>(open(path)?)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for (i, r) in records.into_iter().enumerate() {
        let Some(system) = r.system else {
            usage!("{}: record {} has no `system` field", path.display(), i + 1);
        };
        let key = (r.seg_id, system);
        if out.contains_key(&key) {
            usage!(
                "{}: duplicate record for segment {:?}, system {:?}",
                path.display(),
                key.0,
                key.1
            );
        }
        out.insert(key, ForceDecodeResult::new(r.log_probs)?);
    }
    Ok(out)
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let norm = match a.normalization {
        Norm::H => Normalization::H,
        Norm::G => Normalization::G,
    };
    let steps = (1.0 / a.step).round();
    if !(a.step > 0.0 && a.step <= 1.0) || (steps * a.step - 1.0).abs() > 1e-9 {
        usage!("--step {} must divide 1 evenly", a.step);
    }
    let parsed = read_darr(open(&a.judgments)?)?;
    if !parsed.malformed.is_empty() {
        let list: Vec<String> = parsed
            .malformed
            .iter()
            .map(|(l, r)| format!("  line {l}: {r}"))
            .collect();
        usage!(
            "malformed judgment rows in {}:\n{}",
            a.judgments.display(),
            list.join("\n")
        );
    }
    let (fwd, rev) = (read_decodes(&a.fwd)?, read_decodes(&a.rev)?);
    let result = weight_sweep(&fwd, &rev, norm, a.step, &parsed.rows)?;

    #[derive(Serialize)]
    struct Config {
        normalization: Normalization,
        step: f64,
    }
    #[derive(Serialize)]
    struct Argmax {
        best_weight: f64,
        best_tau: f64,
    }
    let argmax = Argmax {
        best_weight: result.best_weight,
        best_tau: result.best_tau,
    };
    let mut manifest = RunManifest::new(
        "sweep",
        Config {
            normalization: norm,
            step: a.step,
        },
    )?;
    manifest.inputs = vec![a.fwd.clone(), a.rev.clone(), a.judgments.clone()];
    manifest.outputs = vec![a.out.clone()];
    manifest.summary = Some(serde_json::to_value(&argmax)?);

    let mut staging = Staging::new();
    staging.write(&a.out, |w| {
        writeln!(w, "w,tau")?;
        for (wt, tau) in &result.curve {
            writeln!(w, "{wt},{tau}")?;
        }
        Ok(())
    })?;
    staging.write_json(&manifest_path(&a.out), &manifest)?;
    staging.commit()?;
    println!("{}", serde_json::to_string(&argmax)?);
    Ok(())
}

pub fn bias(a: BiasArgs) -> Result<()> {
    let h = read_scores(&a.h_scores)?;
    let b = read_scores(&a.sbleu)?;
    let bleu: HashMap<(&str, &str), f64> = b
        .iter()
        .map(|r| ((r.seg_id.as_str(), r.system.as_str()), r.value))
        .collect();
    let mut hv = Vec::with_capacity(h.len());
    let mut bv = Vec::with_capacity(h.len());
    for r in &h {
        let Some(&v) = bleu.get(&(r.seg_id.as_str(), r.system.as_str())) else {
            usage!(
                "no sentBLEU score for segment {:?} of system {:?} in {}",
                r.seg_id,
                r.system,
                a.sbleu.display()
            );
        };
        hv.push(r.value);
        bv.push(v);
    }
    if h.len() != b.len() {
        usage!("{} H scores but {} sentBLEU scores", h.len(), b.len());
    }
    let bins = match bias_bins(&hv, &bv, a.bins) {
        Ok(bins) => bins,
        Err(e @ prismkit::Error::InvalidParameter { .. }) => usage!("{e}"),
        Err(e) => return Err(e.into()),
    };

    #[derive(Serialize)]
    struct Config {
        bins: usize,
    }
    let mut manifest = RunManifest::new("bias", Config { bins: a.bins })?;
    manifest.inputs = vec![a.h_scores.clone(), a.sbleu.clone()];
    manifest.outputs = vec![a.out.clone()];

    let mut staging = Staging::new();
    staging.write(&a.out, |w| {
        writeln!(w, "lo,hi,count,fraction,mean_h")?;
        for bin in &bins {
            let mean = bin.mean_h.map(|m| m.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                bin.lo,
                bin.hi,
                bin.count,
                bin.fraction_f64(),
                mean
            )?;
        }
        Ok(())
    })?;
    staging.write_json(&manifest_path(&a.out), &manifest)?;
    staging.commit()
}
