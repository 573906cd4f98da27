use anyhow::{Context, Result};
use prismkit::baselines::BleuConfig;
use prismkit::metricseval::{copy_vs_beam_report, default_max_len};
use prismkit::{CopyModel, TokenSequence};
use rayon::prelude::*;
use serde::Serialize;

use super::{check_aligned, lang, open, read_tokenized};
use crate::output::{manifest_path, with_suffix, RunManifest, Staging};
use crate::{usage, GenerateArgs, ReportKind};

pub fn run(a: GenerateArgs) -> Result<()> {
    let Some(model_path) = &a.model else {
        usage!("generate requires --model (see `prismkit build-model --kind copy`)");
    };
    if a.beam == 0 {
        usage!("--beam must be at least 1");
    }
    if a.r1.is_some() && a.report != ReportKind::CopyVsBeam {
        usage!("--r1 is only used with --report copy-vs-beam");
    }
    let model = CopyModel::load_json(open(model_path)?)
        .with_context(|| format!("loading {}", model_path.display()))?;
    let lang = lang(&a.lang)?;
    let inputs = read_tokenized(&a.input, a.tokenize.into(), &lang)?;
    let mut manifest_inputs = vec![model_path.clone(), a.input.clone()];

    let mut report_json = None;
    let outputs: Vec<TokenSequence> = match a.report {
        ReportKind::None => inputs
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let max_len = a.max_len.unwrap_or_else(|| default_max_len(x.len()));
                Ok(model
                    .beam_search(x, a.beam, max_len)
                    .with_context(|| format!("line {}", i + 1))?
                    .sequence)
            })
            .collect::<Result<_>>()?,
        ReportKind::CopyVsBeam => {
            if a.max_len.is_some() {
                usage!("--max-len is fixed to 2|x| + 4 for the copy-vs-beam report");
            }
            let r1 = match &a.r1 {
                Some(p) => {
                    let r1 = read_tokenized(p, a.tokenize.into(), &lang)?;
                    check_aligned(&[(&a.input, inputs.len()), (p, r1.len())])?;
                    manifest_inputs.push(p.clone());
                    Some(r1)
                }
                None => None,
            };
            let report = copy_vs_beam_report(
                &model,
                &inputs,
                r1.as_deref(),
                a.beam,
                &BleuConfig::default(),
            )?;
            if report.skipped > 0 {
                eprintln!(
                    "warning: {} of {} segments could not be decoded and were left empty",
                    report.skipped, report.segments
                );
            }
            println!("H(BS|r0)  H(r0|r0)  H(r1|r0)  BLEU(BS, r0)");
            println!(
                "{:8.3}  {:8.3}  {:>8}  {:12.1}",
                report.h_bs_given_r0,
                report.h_r0_given_r0,
                report
                    .h_r1_given_r0
                    .map_or("-".to_string(), |v| format!("{v:.3}")),
                report.bleu_bs_r0
            );
            report_json = Some(serde_json::to_value(&report)?);
            report
                .outputs
                .into_iter()
                .map(|o| o.unwrap_or_else(|| TokenSequence::empty(lang.clone())))
                .collect()
        }
    };

    #[derive(Serialize)]
    struct Config {
        beam: usize,
        max_len: Option<usize>,
        report: String,
        lang: String,
        tokenize: String,
        model: prismkit::ChannelParams,
    }
    let mut manifest = RunManifest::new(
        "generate",
        Config {
            beam: a.beam,
            max_len: a.max_len,
            report: format!("{:?}", a.report).to_lowercase(),
            lang: a.lang.clone(),
            tokenize: format!("{:?}", a.tokenize).to_lowercase(),
            model: *model.params(),
        },
    )?;
    manifest.inputs = manifest_inputs;
    manifest.outputs = vec![a.out.clone()];

    let mut staging = Staging::new();
    staging.write(&a.out, |w| {
        for o in &outputs {
            writeln!(w, "{}", o.join())?;
        }
        Ok(())
    })?;
    if let Some(report) = &report_json {
        let path = with_suffix(&a.out, ".report.json");
        manifest.outputs.push(path.clone());
        manifest.summary = Some(report.clone());
        staging.write_json(&path, report)?;
    }
    staging.write_json(&manifest_path(&a.out), &manifest)?;
    staging.commit()
}
