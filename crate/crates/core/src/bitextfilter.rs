//! Bitext cleaning: length, copy-overlap, windowed LID and margin filters,
//! plus target-tag prepending and pair mirroring.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::text::{ngrams, tokenize, Lang, TokenSequence, TokenizeMode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub max_tokens: usize,
    pub tri_overlap_max: f64,
    pub four_overlap_max: f64,
    pub lid_min_fraction: f64,
    pub lid_window: usize,
    pub margin_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_tokens: 200,
            tri_overlap_max: 0.60,
            four_overlap_max: 0.40,
            lid_min_fraction: 0.50,
            lid_window: 5,
            margin_threshold: 1.05,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &'static str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} not in (0, 1]")))
            }
        };
        unit("tri_overlap_max", self.tri_overlap_max)?;
        unit("four_overlap_max", self.four_overlap_max)?;
        unit("lid_min_fraction", self.lid_min_fraction)?;
        if !(self.margin_threshold > 0.0 && self.margin_threshold.is_finite()) {
            return Err(Error::param(
                "margin_threshold",
                "must be positive and finite",
            ));
        }
        if self.max_tokens == 0 {
            return Err(Error::param("max_tokens", "must be at least 1"));
        }
        if self.lid_window == 0 {
            return Err(Error::param("lid_window", "must be at least 1"));
        }
        Ok(())
    }
}

/// Filter rules in pipeline order. A dropped pair is charged to the first rule that rejects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Malformed,
    Empty,
    Length,
    CopyOverlap,
    Lid,
    Margin,
    MarginError,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::Malformed,
        Rule::Empty,
        Rule::Length,
        Rule::CopyOverlap,
        Rule::Lid,
        Rule::Margin,
        Rule::MarginError,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_pairs: usize,
    pub kept: usize,
    pub dropped_by_rule: BTreeMap<Rule, usize>,
}

impl FilterReport {
    pub fn new() -> Self {
        FilterReport {
            input_pairs: 0,
            kept: 0,
            dropped_by_rule: Rule::ALL.iter().map(|&r| (r, 0)).collect(),
        }
    }

    pub fn dropped(&self, rule: Rule) -> usize {
        self.dropped_by_rule.get(&rule).copied().unwrap_or(0)
    }

    /// `kept + dropped == input_pairs`.
    pub fn is_conserved(&self) -> bool {
        self.kept + self.dropped_by_rule.values().sum::<usize>() == self.input_pairs
    }
}

impl Default for FilterReport {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitextPair {
    pub src: TokenSequence,
    pub tgt: TokenSequence,
}

/// One input line: a parsed pair, or the reason it could not be parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum PairInput {
    Pair(BitextPair),
    Malformed { line: usize, reason: String },
}

pub fn length_filter(pair: &BitextPair, max_tokens: usize) -> bool {
    pair.src.len() <= max_tokens && pair.tgt.len() <= max_tokens
}

/// `|A ∩ B| / min(|A|, |B|)` over the n-gram *sets* of both sides; 0 when either side is shorter than `n`.
pub fn overlap_fraction(a: &TokenSequence, b: &TokenSequence, n: usize) -> f64 {
    let (ga, gb) = (ngrams(a, n), ngrams(b, n));
    let (sa, sb) = (ga.to_set(), gb.to_set());
    let denom = sa.len().min(sb.len());
    if denom == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CopyOverlap {
    pub tri: f64,
    pub four: f64,
    pub keep: bool,
}

pub fn copy_overlap(pair: &BitextPair, tri_max: f64, four_max: f64) -> CopyOverlap {
    let tri = overlap_fraction(&pair.src, &pair.tgt, 3);
    let four = overlap_fraction(&pair.src, &pair.tgt, 4);
    CopyOverlap {
        tri,
        four,
        keep: !(tri > tri_max || four > four_max),
    }
}

/// Maps a token window to a language.
pub trait LidClassifier: Send + Sync {
    fn classify(&self, window: &[String]) -> Result<Lang>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LidOutcome {
    pub fraction: f64,
    pub windows: usize,
    pub keep: bool,
}

/// Stride-1 windows of `window` tokens; a shorter sequence is a single window.
/// A window the classifier fails on counts as not `expected`.
pub fn lid_filter(
    seq: &TokenSequence,
    expected: &Lang,
    classifier: &(impl LidClassifier + ?Sized),
    window: usize,
    min_fraction: f64,
) -> LidOutcome {
    let windows: Vec<&[String]> = if seq.len() <= window {
        vec![&seq.tokens[..]]
    } else {
        seq.tokens.windows(window).collect()
    };
    let hits = windows
        .iter()
        .filter(|w| matches!(classifier.classify(w), Ok(ref l) if l == expected))
        .count();
    let fraction = hits as f64 / windows.len() as f64;
    LidOutcome {
        fraction,
        windows: windows.len(),
        keep: fraction >= min_fraction,
    }
}

/// Scores how likely a pair is a mutual translation. Higher is better.
pub trait MarginScorer: Send + Sync {
    fn margin(&self, pair: &BitextPair) -> Result<f64>;
}

/// `Ok(true)` keeps; scorer errors propagate so the caller can count them separately.
pub fn margin_filter(
    pair: &BitextPair,
    scorer: &(impl MarginScorer + ?Sized),
    threshold: f64,
) -> Result<bool> {
    Ok(scorer.margin(pair)? >= threshold)
}

/// Majority vote of a token → language lexicon. Windows with no known token,
/// or with a tie, are classifier failures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DictionaryClassifier {
    pub lexicon: HashMap<String, Lang>,
}

impl DictionaryClassifier {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, Lang)>) -> Self {
        DictionaryClassifier {
            lexicon: entries.into_iter().map(|(t, l)| (t.into(), l)).collect(),
        }
    }

    /// Reads `token \t lang` lines.
    pub fn read_tsv(reader: impl BufRead) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (tok, lang) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                reason: "expected `token<TAB>lang`".into(),
            })?;
            let lang = Lang::new(lang.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                reason: e.to_string(),
            })?;
            lexicon.insert(tok.to_string(), lang);
        }
        Ok(DictionaryClassifier { lexicon })
    }
}

impl LidClassifier for DictionaryClassifier {
    fn classify(&self, window: &[String]) -> Result<Lang> {
        let mut votes: BTreeMap<&Lang, usize> = BTreeMap::new();
        for tok in window {
            if let Some(l) = self.lexicon.get(tok) {
                *votes.entry(l).or_default() += 1;
            }
        }
        let best = votes
            .values()
            .copied()
            .max()
            .ok_or(Error::Scorer("no known token in window".into()))?;
        let mut winners = votes.into_iter().filter(|(_, v)| *v == best);
        match (winners.next(), winners.next()) {
            (Some((l, _)), None) => Ok(l.clone()),
            _ => Err(Error::Scorer("tied language vote".into())),
        }
    }
}

/// Toy margin proxy: `1 + 0.1 * min(len) / max(len)`, so equal lengths give
/// 1.1 and a 2:1 length ratio gives exactly 1.05.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LengthRatioScorer;

impl MarginScorer for LengthRatioScorer {
    fn margin(&self, pair: &BitextPair) -> Result<f64> {
        let (a, b) = (pair.src.len(), pair.tgt.len());
        if a == 0 || b == 0 {
            return Err(Error::Scorer("length ratio of an empty side".into()));
        }
        Ok(1.0 + 0.1 * a.min(b) as f64 / a.max(b) as f64)
    }
}

fn decide(
    cfg: &FilterConfig,
    input: &PairInput,
    classifier: Option<&dyn LidClassifier>,
    scorer: Option<&dyn MarginScorer>,
) -> Option<Rule> {
    let pair = match input {
        PairInput::Pair(p) => p,
        PairInput::Malformed { .. } => return Some(Rule::Malformed),
    };
    if pair.src.is_empty() || pair.tgt.is_empty() {
        return Some(Rule::Empty);
    }
    if !length_filter(pair, cfg.max_tokens) {
        return Some(Rule::Length);
    }
    if !copy_overlap(pair, cfg.tri_overlap_max, cfg.four_overlap_max).keep {
        return Some(Rule::CopyOverlap);
    }
    if let Some(c) = classifier {
        for side in [&pair.src, &pair.tgt] {
            if !lid_filter(side, &side.lang, c, cfg.lid_window, cfg.lid_min_fraction).keep {
                return Some(Rule::Lid);
            }
        }
    }
    if let Some(s) = scorer {
        match margin_filter(pair, s, cfg.margin_threshold) {
            Ok(true) => {}
            Ok(false) => return Some(Rule::Margin),
            Err(_) => return Some(Rule::MarginError),
        }
    }
    None
}

/// Applies non-empty → length → copy overlap → LID (both sides) → margin.
/// A `None` classifier or scorer disables that stage.
///
/// Pairs are judged in parallel; the kept list preserves input order and the
/// report equals the sequential one.
pub fn run_pipeline(
    cfg: &FilterConfig,
    inputs: &[PairInput],
    classifier: Option<&dyn LidClassifier>,
    scorer: Option<&dyn MarginScorer>,
) -> Result<(Vec<BitextPair>, FilterReport)> {
    cfg.validate()?;
    let verdicts: Vec<Option<Rule>> = inputs
        .par_iter()
        .map(|p| decide(cfg, p, classifier, scorer))
        .collect();
    let mut report = FilterReport::new();
    report.input_pairs = inputs.len();
    let mut kept = Vec::new();
    for (input, verdict) in inputs.iter().zip(verdicts) {
        match (verdict, input) {
            (None, PairInput::Pair(p)) => {
                kept.push(p.clone());
                report.kept += 1;
            }
            (Some(rule), _) => *report.dropped_by_rule.entry(rule).or_default() += 1,
            (None, PairInput::Malformed { .. }) => {
                unreachable!("malformed inputs are always dropped")
            }
        }
    }
    Ok((kept, report))
}

pub fn lang_tag(lang: &Lang) -> String {
    format!("<{lang}>")
}

pub fn prepend_lang_tag(target: &TokenSequence) -> TokenSequence {
    let mut tokens = Vec::with_capacity(target.len() + 1);
    tokens.push(lang_tag(&target.lang));
    tokens.extend(target.tokens.iter().cloned());
    TokenSequence::new(tokens, target.lang.clone())
}

/// Inverse of [`prepend_lang_tag`]; `None` if the first token is not the tag.
pub fn strip_lang_tag(target: &TokenSequence) -> Option<TokenSequence> {
    match target.tokens.first() {
        Some(t) if *t == lang_tag(&target.lang) => Some(TokenSequence::new(
            target.tokens[1..].iter().cloned(),
            target.lang.clone(),
        )),
        _ => None,
    }
}

/// Each pair followed by its mirror. Not idempotent: applying twice quadruples.
pub fn mirror_pairs(pairs: &[BitextPair]) -> Vec<BitextPair> {
    pairs
        .iter()
        .flat_map(|p| {
            [
                p.clone(),
                BitextPair {
                    src: p.tgt.clone(),
                    tgt: p.src.clone(),
                },
            ]
        })
        .collect()
}

fn split_lines(reader: impl BufRead) -> Result<Vec<std::result::Result<String, String>>> {
    reader
        .split(b'\n')
        .map(|line| {
            let mut bytes = line?;
            if bytes.last() == Some(&b'\r') {
                bytes.pop();
            }
            Ok(String::from_utf8(bytes).map_err(|_| "invalid UTF-8".to_string()))
        })
        .collect()
}

/// Reads `src \t tgt` lines. Lines without exactly one tab, or with invalid UTF-8, are malformed.
pub fn read_tsv_pairs(
    reader: impl BufRead,
    src_lang: &Lang,
    tgt_lang: &Lang,
    mode: TokenizeMode,
) -> Result<Vec<PairInput>> {
    Ok(split_lines(reader)?
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            let malformed = |reason: String| PairInput::Malformed {
                line: i + 1,
                reason,
            };
            match line {
                Err(reason) => malformed(reason),
                Ok(text) => {
                    let cols: Vec<&str> = text.split('\t').collect();
                    if cols.len() != 2 {
                        return malformed(format!(
                            "expected 2 tab-separated fields, found {}",
                            cols.len()
                        ));
                    }
                    PairInput::Pair(BitextPair {
                        src: tokenize(cols[0], mode, src_lang),
                        tgt: tokenize(cols[1], mode, tgt_lang),
                    })
                }
            }
        })
        .collect())
}

/// Reads two line-aligned files. Differing line counts are an error.
pub fn read_aligned_pairs(
    src: impl BufRead,
    tgt: impl BufRead,
    src_lang: &Lang,
    tgt_lang: &Lang,
    mode: TokenizeMode,
) -> Result<Vec<PairInput>> {
    let (s, t) = (split_lines(src)?, split_lines(tgt)?);
    if s.len() != t.len() {
        return Err(Error::param(
            "bitext",
            format!("source has {} lines, target has {}", s.len(), t.len()),
        ));
    }
    Ok(s.into_iter()
        .zip(t)
        .enumerate()
        .map(|(i, pair)| match pair {
            (Ok(a), Ok(b)) => PairInput::Pair(BitextPair {
                src: tokenize(&a, mode, src_lang),
                tgt: tokenize(&b, mode, tgt_lang),
            }),
            (Err(reason), _) | (_, Err(reason)) => PairInput::Malformed {
                line: i + 1,
                reason,
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(s: &str) -> Lang {
        Lang::new(s).unwrap()
    }

    fn seq(s: &str, l: &str) -> TokenSequence {
        TokenSequence::new(s.split_whitespace(), lang(l))
    }

    fn pair(a: &str, b: &str) -> BitextPair {
        BitextPair {
            src: seq(a, "en"),
            tgt: seq(b, "fr"),
        }
    }

    fn words(prefix: &str, n: usize) -> String {
        (0..n)
            .map(|i| format!("{prefix}{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn length_boundary() {
        assert!(length_filter(
            &pair(&words("a", 200), &words("b", 200)),
            200
        ));
        assert!(!length_filter(&pair(&words("a", 201), &words("b", 3)), 200));
        assert!(length_filter(&pair("", "x"), 200));
    }

    #[test]
    fn overlap_cases() {
        let same = words("w", 10);
        let c = copy_overlap(&pair(&same, &same), 0.6, 0.4);
        assert_eq!((c.tri, c.four, c.keep), (1.0, 1.0, false));

        let c = copy_overlap(&pair(&words("a", 10), &words("b", 10)), 0.6, 0.4);
        assert_eq!((c.tri, c.four, c.keep), (0.0, 0.0, true));

        // src has 8 distinct 3-grams, tgt 9; they share only "a0 a1 a2"
        let c = copy_overlap(
            &pair(&words("a", 10), "a0 a1 a2 b0 b1 b2 b3 b4 b5 b6 b7"),
            0.6,
            0.4,
        );
        assert_eq!((c.tri, c.four, c.keep), (0.125, 0.0, true));

        assert_eq!(
            overlap_fraction(&seq("a b", "en"), &seq("a b", "fr"), 3),
            0.0
        );
    }

    #[test]
    fn overlap_is_symmetric() {
        let (a, b) = (seq("x y z w v x y z", "en"), seq("q x y z w r", "fr"));
        for n in 1..5 {
            assert_eq!(overlap_fraction(&a, &b, n), overlap_fraction(&b, &a, n));
        }
    }

    #[test]
    fn overlap_threshold_is_exclusive() {
        // 5 distinct 3-grams on the smaller side, 3 shared: exactly 0.6
        let c = copy_overlap(&pair("a b c d e f g", "a b c d e x y z"), 0.6, 1.0);
        assert_eq!(c.tri, 0.6);
        assert!(c.keep);
    }

    fn dict() -> DictionaryClassifier {
        DictionaryClassifier::new(
            ["the", "cat", "sat", "on", "a", "mat", "dog"]
                .into_iter()
                .map(|t| (t, lang("en")))
                .chain(
                    ["le", "chat", "sur", "un", "tapis", "chien"]
                        .into_iter()
                        .map(|t| (t, lang("fr"))),
                ),
        )
    }

    #[test]
    fn lid_windows() {
        let c = dict();
        let all_en = lid_filter(&seq("the cat sat on a mat", "en"), &lang("en"), &c, 5, 0.5);
        assert_eq!(
            (all_en.fraction, all_en.windows, all_en.keep),
            (1.0, 2, true)
        );

        let other = lid_filter(&seq("le chat sur un tapis", "en"), &lang("en"), &c, 5, 0.5);
        assert_eq!((other.fraction, other.keep), (0.0, false));

        // 10 tokens, 6 windows; windows 0-2 have an English majority, 3-5 French
        let mixed = seq("the cat sat on a le chat sur un tapis", "en");
        let o = lid_filter(&mixed, &lang("en"), &c, 5, 0.5);
        assert_eq!((o.windows, o.fraction, o.keep), (6, 0.5, true));

        let short = lid_filter(&seq("the cat", "en"), &lang("en"), &c, 5, 0.5);
        assert_eq!(short.windows, 1);
        let unknown = lid_filter(&seq("zz yy", "en"), &lang("en"), &c, 5, 0.5);
        assert_eq!(unknown.fraction, 0.0);
    }

    #[test]
    fn margin_boundary() {
        struct Fixed(f64);
        impl MarginScorer for Fixed {
            fn margin(&self, _: &BitextPair) -> Result<f64> {
                Ok(self.0)
            }
        }
        let p = pair("a", "b");
        assert!(margin_filter(&p, &Fixed(1.06), 1.05).unwrap());
        assert!(margin_filter(&p, &Fixed(1.05), 1.05).unwrap());
        assert!(!margin_filter(&p, &Fixed(1.04), 1.05).unwrap());
        assert_eq!(LengthRatioScorer.margin(&pair("a b", "c d")).unwrap(), 1.1);
        assert_eq!(
            LengthRatioScorer.margin(&pair("a b c d", "c d")).unwrap(),
            1.05
        );
        assert!(LengthRatioScorer.margin(&pair("", "c d")).is_err());
    }

    #[test]
    fn tags_round_trip() {
        let t = TokenSequence::new(["Salut", "l'ami"], lang("fr"));
        let tagged = prepend_lang_tag(&t);
        assert_eq!(tagged.tokens, vec!["<fr>", "Salut", "l'ami"]);
        assert_eq!(strip_lang_tag(&tagged).unwrap(), t);
        assert_eq!(
            prepend_lang_tag(&TokenSequence::empty(lang("fr"))).tokens,
            vec!["<fr>"]
        );
        assert!(strip_lang_tag(&t).is_none());
    }

    #[test]
    fn mirroring() {
        let p = pair("a", "b");
        let m = mirror_pairs(std::slice::from_ref(&p));
        assert_eq!(m.len(), 2);
        assert_eq!((&m[1].src, &m[1].tgt), (&p.tgt, &p.src));
        assert_eq!(mirror_pairs(&m).len(), 4);
        assert!(mirror_pairs(&[]).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            tri_overlap_max: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterConfig {
            lid_window: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let parsed: FilterConfig = serde_json::from_str(r#"{"margin_threshold": 1.04}"#).unwrap();
        assert_eq!(parsed.margin_threshold, 1.04);
        assert_eq!(parsed.max_tokens, 200);
    }

    #[test]
    fn readers() {
        let (en, fr) = (lang("en"), lang("fr"));
        let rows = read_tsv_pairs(
            "a b\tc\nno tab\n\t\n".as_bytes(),
            &en,
            &fr,
            TokenizeMode::Whitespace,
        )
        .unwrap();
        assert!(matches!(rows[0], PairInput::Pair(_)));
        assert!(matches!(rows[1], PairInput::Malformed { line: 2, .. }));
        assert!(matches!(rows[2], PairInput::Pair(ref p) if p.src.is_empty()));

        let rows = read_aligned_pairs(
            &b"x\n\xff\n"[..],
            "y\nz\n".as_bytes(),
            &en,
            &fr,
            TokenizeMode::Whitespace,
        )
        .unwrap();
        assert!(matches!(rows[1], PairInput::Malformed { line: 2, .. }));
        assert!(read_aligned_pairs(
            "x\n".as_bytes(),
            "".as_bytes(),
            &en,
            &fr,
            TokenizeMode::Whitespace
        )
        .is_err());
    }

    #[test]
    fn empty_pipeline() {
        let (kept, report) = run_pipeline(&FilterConfig::default(), &[], None, None).unwrap();
        assert!(kept.is_empty());
        assert_eq!(report, FilterReport::new());
        assert!(report.is_conserved());
    }
}
