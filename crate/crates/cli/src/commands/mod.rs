pub mod analysis;
pub mod eval;
pub mod filter;
pub mod generate;
pub mod model;
pub mod score;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use prismkit::scoring::{read_scores_jsonl, read_scores_tsv, ScoreRecord};
use prismkit::text::{read_segments, Lang};
use prismkit::{tokenize, TokenSequence, TokenizeMode};

use crate::usage;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    if !path.exists() {
        usage!("input file {} does not exist", path.display());
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn lang(tag: &str) -> Result<Lang> {
    match Lang::new(tag) {
        Ok(l) => Ok(l),
        Err(e) => usage!("{e}"),
    }
}

pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    if !path.exists() {
        usage!("input file {} does not exist", path.display());
    }
    read_segments(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_tokenized(path: &Path, mode: TokenizeMode, lang: &Lang) -> Result<Vec<TokenSequence>> {
    Ok(read_lines(path)?
        .iter()
        .map(|l| tokenize(l, mode, lang))
        .collect())
}

/// Fails with a usage error naming every file's line count unless they agree.
pub fn check_aligned(files: &[(&Path, usize)]) -> Result<()> {
    if files.windows(2).any(|w| w[0].1 != w[1].1) {
        let counts: Vec<String> = files
            .iter()
            .map(|(p, n)| format!("{} has {n} lines", p.display()))
            .collect();
        usage!("line counts differ: {}", counts.join(", "));
    }
    Ok(())
}

/// JSONL, or TSV when the file name ends in `.tsv`.
pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord<f64>>> {
    let r = open(path)?;
    let records = if path.extension().is_some_and(|e| e == "tsv") {
        read_scores_tsv(r)
    } else {
        read_scores_jsonl(r)
    };
    records.with_context(|| format!("reading scores from {}", path.display()))
}
