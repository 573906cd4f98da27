//! Token sequences, tokenizers and n-gram bags.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A validated language tag: non-empty, lowercase ASCII letters, digits, `-` or `_`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lang(String);

impl Lang {
    pub fn new(tag: &str) -> Result<Self> {
        let ok = !tag.is_empty()
            && tag
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_');
        if ok {
            Ok(Lang(tag.to_string()))
        } else {
            Err(Error::param(
                "lang",
                format!("{tag:?} is not a lowercase language tag"),
            ))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Lang {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        Lang::new(&value)
    }
}

impl From<Lang> for String {
    fn from(value: Lang) -> Self {
        value.0
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A tokenized sentence with its language. No EOS is stored; scorers add it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub lang: Lang,
}

impl TokenSequence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>, lang: Lang) -> Self {
        TokenSequence {
            tokens: tokens.into_iter().map(Into::into).collect(),
            lang,
        }
    }

    pub fn empty(lang: Lang) -> Self {
        TokenSequence {
            tokens: Vec::new(),
            lang,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Tokens joined by single spaces.
    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    /// Split on runs of Unicode whitespace.
    #[default]
    Whitespace,
    /// One token per non-whitespace Unicode scalar value.
    Character,
}

impl std::str::FromStr for TokenizeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(TokenizeMode::Whitespace),
            "character" => Ok(TokenizeMode::Character),
            other => Err(Error::param(
                "tokenize mode",
                format!("unknown mode {other:?}"),
            )),
        }
    }
}

pub fn tokenize(text: &str, mode: TokenizeMode, lang: &Lang) -> TokenSequence {
    let tokens: Vec<String> = match mode {
        TokenizeMode::Whitespace => text.split_whitespace().map(str::to_string).collect(),
        TokenizeMode::Character => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    };
    TokenSequence {
        tokens,
        lang: lang.clone(),
    }
}

/// Multiset of n-token tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramBag {
    n: usize,
    grams: HashMap<Vec<String>, usize>,
}

impl NGramBag {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn count(&self, gram: &[&str]) -> usize {
        let key: Vec<String> = gram.iter().map(|s| s.to_string()).collect();
        self.grams.get(&key).copied().unwrap_or(0)
    }

    /// Total number of grams, counting multiplicity.
    pub fn total(&self) -> usize {
        self.grams.values().sum()
    }

    pub fn distinct(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], usize)> {
        self.grams.iter().map(|(g, &c)| (g.as_slice(), c))
    }

    /// Sum over grams of min(count here, count in `other`).
    pub fn clipped_matches(&self, other: &NGramBag) -> usize {
        self.grams
            .iter()
            .map(|(g, &c)| c.min(other.grams.get(g).copied().unwrap_or(0)))
            .sum()
    }

    pub fn to_set(&self) -> BTreeSet<&[String]> {
        self.grams.keys().map(Vec::as_slice).collect()
    }
}

/// Panics if `n == 0`.
pub fn ngrams(seq: &TokenSequence, n: usize) -> NGramBag {
    ngrams_of(&seq.tokens, n)
}

pub(crate) fn ngrams_of<S: AsRef<str>>(tokens: &[S], n: usize) -> NGramBag {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut grams = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            let key: Vec<String> = w.iter().map(|s| s.as_ref().to_string()).collect();
            *grams.entry(key).or_insert(0) += 1;
        }
    }
    NGramBag { n, grams }
}

/// Reads a segment file: UTF-8, one segment per line, LF line endings.
pub fn read_segments(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    read_segments_from(std::io::BufReader::new(file))
}

pub fn read_segments_from(reader: impl BufRead) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in reader.split(b'\n').enumerate() {
        let bytes = line?;
        let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
            line: i + 1,
            reason: "invalid UTF-8".into(),
        })?;
        out.push(text);
    }
    Ok(out)
}
