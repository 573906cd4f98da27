use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use prismkit::baselines::{chrf, sent_bleu, BleuConfig};
use prismkit::copymodel::ChannelParams;
use prismkit::scoring::{
    lm_score, prism_ref, prism_src, write_scores_jsonl, write_scores_tsv, ConditionalScorer,
    PrecomputedLogProbs, ScoreRecord,
};
use prismkit::{CopyModel, LanguageModel, TokenSequence, TokenizeMode};
use rayon::prelude::*;
use serde::Serialize;

use super::{check_aligned, lang, open, read_lines, read_tokenized};
use crate::output::{manifest_path, RunManifest, Staging};
use crate::{usage, Backend, Metric, ScoreArgs, ScoreFormat};

#[derive(Serialize)]
struct Config<'a> {
    metric: String,
    backend: String,
    system: &'a str,
    lang: &'a str,
    src_lang: &'a str,
    tokenize: String,
    model: &'a str,
    bleu: Option<BleuConfig>,
    chrf_order: Option<usize>,
    chrf_beta: Option<f64>,
}

fn require<'a>(path: &'a Option<PathBuf>, flag: &str, metric: Metric) -> Result<&'a Path> {
    match path {
        Some(p) => Ok(p),
        None => usage!("--metric {metric} requires --{flag}"),
    }
}

pub fn run(a: ScoreArgs) -> Result<()> {
    let mode: TokenizeMode = a.tokenize.into();
    let tgt_lang = lang(&a.lang)?;
    let src_lang = lang(&a.src_lang)?;
    let system = a.system.clone().unwrap_or_else(|| {
        a.sys
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "system".into())
    });
    let metric_name = a.metric.to_string();
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut model_desc = String::from("none");
    let mut bleu = None;

    let values: Vec<(String, f64)> = if a.backend == Backend::Precomputed
        && matches!(a.metric, Metric::PrismRef | Metric::PrismSrc)
    {
        let path = require(&a.logprobs, "logprobs", a.metric)?;
        inputs.push(path.to_path_buf());
        let table = PrecomputedLogProbs::<f64>::read_jsonl(open(path)?)
            .with_context(|| format!("reading {}", path.display()))?;
        model_desc = "precomputed".into();
        table
            .seg_ids()
            .iter()
            .map(|id| {
                let v = if a.metric == Metric::PrismRef {
                    table.prism_ref(id)
                } else {
                    table.prism_src(id)
                };
                Ok((id.clone(), v?))
            })
            .collect::<prismkit::Result<_>>()?
    } else {
        let sys_path = require(&a.sys, "sys", a.metric)?;
        let sys = read_tokenized(sys_path, mode, &tgt_lang)?;
        inputs.push(sys_path.to_path_buf());
        let mut aligned = vec![(sys_path, sys.len())];
        let other = match a.metric {
            Metric::PrismRef | Metric::Sentbleu | Metric::Chrf => {
                let p = require(&a.reference, "ref", a.metric)?;
                inputs.push(p.to_path_buf());
                Some(p)
            }
            Metric::PrismSrc => {
                let p = require(&a.src, "src", a.metric)?;
                inputs.push(p.to_path_buf());
                Some(p)
            }
            Metric::Lm => None,
        };
        let other_lang = if a.metric == Metric::PrismSrc {
            &src_lang
        } else {
            &tgt_lang
        };
        let other_seqs = match other {
            Some(p) => {
                let seqs = read_tokenized(p, mode, other_lang)?;
                aligned.push((p, seqs.len()));
                seqs
            }
            None => Vec::new(),
        };
        check_aligned(&aligned)?;

        let scores: Vec<f64> = match a.metric {
            Metric::Sentbleu => {
                let cfg = BleuConfig {
                    smoothing: a.bleu_smoothing.into(),
                    ..Default::default()
                };
                bleu = Some(cfg);
                sys.iter()
                    .zip(&other_seqs)
                    .map(|(s, r)| sent_bleu(s, r, &cfg))
                    .collect::<prismkit::Result<_>>()?
            }
            Metric::Chrf => {
                let (sys_raw, ref_raw) = (
                    read_lines(sys_path)?,
                    read_lines(other.expect("ref checked"))?,
                );
                sys_raw
                    .iter()
                    .zip(&ref_raw)
                    .map(|(s, r)| chrf(s, r, a.chrf_order, a.chrf_beta))
                    .collect::<prismkit::Result<_>>()?
            }
            Metric::PrismRef | Metric::PrismSrc | Metric::Lm => {
                let scorer = load_scorer(&a, &sys, &other_seqs, &mut inputs, &mut model_desc)?;
                sys.par_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let v = match a.metric {
                            Metric::PrismRef => prism_ref(scorer.as_ref(), s, &other_seqs[i]),
                            Metric::PrismSrc => prism_src(scorer.as_ref(), s, &other_seqs[i]),
                            _ => lm_score(scorer.as_ref(), s),
                        };
                        v.with_context(|| format!("segment {}", i + 1))
                    })
                    .collect::<Result<_>>()?
            }
        };
        scores
            .into_iter()
            .enumerate()
            .map(|(i, v)| ((i + 1).to_string(), v))
            .collect()
    };

    let records: Vec<ScoreRecord<f64>> = values
        .into_iter()
        .map(|(seg_id, value)| ScoreRecord {
            seg_id,
            system: system.clone(),
            metric: metric_name.clone(),
            value,
        })
        .collect();

    let uses_chrf = a.metric == Metric::Chrf;
    let config = Config {
        metric: metric_name.clone(),
        backend: format!("{:?}", a.backend).to_lowercase(),
        system: &system,
        lang: &a.lang,
        src_lang: &a.src_lang,
        tokenize: format!("{:?}", a.tokenize).to_lowercase(),
        model: &model_desc,
        bleu,
        chrf_order: uses_chrf.then_some(a.chrf_order),
        chrf_beta: uses_chrf.then_some(a.chrf_beta),
    };
    let mut manifest = RunManifest::new("score", &config)?;
    manifest.inputs = inputs;
    manifest.outputs = vec![a.out.clone()];

    let mut staging = Staging::new();
    staging.write(&a.out, |w| {
        match a.format {
            ScoreFormat::Jsonl => write_scores_jsonl(w, &records)?,
            ScoreFormat::Tsv => write_scores_tsv(w, &records)?,
        }
        Ok(())
    })?;
    staging.write_json(&manifest_path(&a.out), &manifest)?;
    staging.commit()
}

fn load_scorer(
    a: &ScoreArgs,
    sys: &[TokenSequence],
    other: &[TokenSequence],
    inputs: &mut Vec<PathBuf>,
    model_desc: &mut String,
) -> Result<Box<dyn ConditionalScorer<f64>>> {
    match (a.backend, a.metric) {
        (Backend::Precomputed, m) => {
            usage!("the precomputed backend supports prism-ref and prism-src, not {m}")
        }
        (Backend::Copymodel, Metric::Lm) => usage!("--metric lm needs --backend lm"),
        (Backend::Copymodel, _) => match &a.model {
            Some(p) => {
                inputs.push(p.clone());
                *model_desc = p.display().to_string();
                let m = CopyModel::load_json(open(p)?)
                    .with_context(|| format!("loading {}", p.display()))?;
                Ok(Box::new(m))
            }
            None => {
                *model_desc = "copy model built from the input files".into();
                Ok(Box::new(CopyModel::from_corpus(
                    sys.iter().chain(other),
                    ChannelParams::default(),
                )?))
            }
        },
        (Backend::Lm, _) => {
            let Some(p) = &a.model else {
                usage!("--backend lm requires --model (see `prismkit build-model --kind lm`)");
            };
            inputs.push(p.clone());
            *model_desc = p.display().to_string();
            let m = LanguageModel::load_json(open(p)?)
                .with_context(|| format!("loading {}", p.display()))?;
            Ok(Box::new(m))
        }
    }
}
