use anyhow::Result;
use prismkit::{ChannelParams, CopyModel, LanguageModel};
use serde::Serialize;

use super::{lang, read_tokenized};
use crate::output::{manifest_path, RunManifest, Staging};
use crate::{usage, BuildModelArgs, ModelKind};

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Config {
    Copy { params: ChannelParams },
    Lm { order: usize, k: f64 },
}

pub fn run(a: BuildModelArgs) -> Result<()> {
    let lang = lang("und")?;
    let mut corpus = Vec::new();
    for p in &a.corpus {
        corpus.extend(read_tokenized(p, a.tokenize.into(), &lang)?);
    }
    let mut staging = Staging::new();
    let config = match a.kind {
        ModelKind::Copy => {
            let d = ChannelParams::default();
            let params = ChannelParams {
                eps: a.eps.unwrap_or(d.eps),
                ins: a.ins.unwrap_or(d.ins),
                del_cont: a.del_cont.unwrap_or(d.del_cont),
                stop_base: a.stop_base.unwrap_or(d.stop_base),
                stop_decay: a.stop_decay.unwrap_or(d.stop_decay),
            };
            if let Err(e) = params.validate() {
                usage!("{e}");
            }
            let model = match CopyModel::from_corpus(&corpus, params) {
                Ok(m) => m,
                Err(prismkit::Error::Empty(_)) => usage!("the corpus contains no tokens"),
                Err(e) => return Err(e.into()),
            };
            staging.write(&a.out, |w| Ok(model.save_json(w)?))?;
            Config::Copy { params }
        }
        ModelKind::Lm => {
            let model = match LanguageModel::train(&corpus, a.order, a.k) {
                Ok(m) => m,
                Err(e @ prismkit::Error::InvalidParameter { .. }) => usage!("{e}"),
                Err(e) => return Err(e.into()),
            };
            staging.write(&a.out, |w| Ok(model.save_json(w)?))?;
            Config::Lm {
                order: a.order,
                k: a.k,
            }
        }
    };
    let mut manifest = RunManifest::new("build-model", &config)?;
    manifest.inputs = a.corpus.clone();
    manifest.outputs = vec![a.out.clone()];
    staging.write_json(&manifest_path(&a.out), &manifest)?;
    staging.commit()
}
