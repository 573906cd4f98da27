use anyhow::{Context, Result};
use prismkit::bitextfilter::{
    mirror_pairs, prepend_lang_tag, read_aligned_pairs, read_tsv_pairs, run_pipeline, BitextPair,
    DictionaryClassifier, FilterConfig, LengthRatioScorer, LidClassifier, MarginScorer,
};
use prismkit::TokenizeMode;

use super::{lang, open};
use crate::output::{with_suffix, RunManifest, Staging};
use crate::{usage, FilterArgs, MarginKind};

pub fn run(a: FilterArgs) -> Result<()> {
    let cfg: FilterConfig = match &a.config {
        Some(p) => {
            serde_json::from_reader(open(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FilterConfig::default(),
    };
    if let Err(e) = cfg.validate() {
        usage!("invalid filter config: {e}");
    }
    let (src_lang, tgt_lang) = (lang(&a.src_lang)?, lang(&a.tgt_lang)?);
    let mode = TokenizeMode::Whitespace;
    let mut inputs = Vec::new();
    let pairs = match (&a.src, &a.tgt, &a.tsv) {
        (Some(s), Some(t), None) => {
            inputs.extend([s.clone(), t.clone()]);
            match read_aligned_pairs(open(s)?, open(t)?, &src_lang, &tgt_lang, mode) {
                Ok(p) => p,
                Err(prismkit::Error::InvalidParameter { reason, .. }) => usage!("{reason}"),
                Err(e) => return Err(e.into()),
            }
        }
        (None, None, Some(p)) => {
            inputs.push(p.clone());
            read_tsv_pairs(open(p)?, &src_lang, &tgt_lang, mode)?
        }
        _ => usage!("give either --src and --tgt, or --tsv"),
    };

    let classifier = match &a.lid_lexicon {
        Some(p) => {
            inputs.push(p.clone());
            Some(
                DictionaryClassifier::read_tsv(open(p)?)
                    .with_context(|| format!("reading {}", p.display()))?,
            )
        }
        None => None,
    };
    let scorer = match a.margin {
        MarginKind::None => None,
        MarginKind::LengthRatio => Some(LengthRatioScorer),
    };
    let (kept, report) = run_pipeline(
        &cfg,
        &pairs,
        classifier.as_ref().map(|c| c as &dyn LidClassifier),
        scorer.as_ref().map(|s| s as &dyn MarginScorer),
    )?;

    let mut out_pairs: Vec<BitextPair> = if a.mirror { mirror_pairs(&kept) } else { kept };
    if a.tag_target {
        for p in &mut out_pairs {
            p.tgt = prepend_lang_tag(&p.tgt);
        }
    }

    let src_out = with_suffix(&a.out_prefix, ".src");
    let tgt_out = with_suffix(&a.out_prefix, ".tgt");
    let report_out = with_suffix(&a.out_prefix, ".report.json");
    let manifest_out = with_suffix(&a.out_prefix, ".manifest.json");

    #[derive(serde::Serialize)]
    struct Config<'a> {
        filter: &'a FilterConfig,
        src_lang: &'a str,
        tgt_lang: &'a str,
        lid: bool,
        margin: String,
        tag_target: bool,
        mirror: bool,
    }
    let mut manifest = RunManifest::new(
        "filter",
        Config {
            filter: &cfg,
            src_lang: &a.src_lang,
            tgt_lang: &a.tgt_lang,
            lid: classifier.is_some(),
            margin: format!("{:?}", a.margin).to_lowercase(),
            tag_target: a.tag_target,
            mirror: a.mirror,
        },
    )?;
    manifest.inputs = inputs;
    manifest.outputs = vec![src_out.clone(), tgt_out.clone(), report_out.clone()];
    manifest.summary = Some(serde_json::to_value(&report)?);

    let mut staging = Staging::new();
    staging.write(&src_out, |w| {
        for p in &out_pairs {
            writeln!(w, "{}", p.src.join())?;
        }
        Ok(())
    })?;
    staging.write(&tgt_out, |w| {
        for p in &out_pairs {
            writeln!(w, "{}", p.tgt.join())?;
        }
        Ok(())
    })?;
    staging.write_json(&report_out, &report)?;
    staging.write_json(&manifest_out, &manifest)?;
    staging.commit()
}
