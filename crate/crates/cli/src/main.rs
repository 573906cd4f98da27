mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prismkit::baselines::Smoothing;
use prismkit::TokenizeMode;

#[derive(Parser)]
#[command(
    name = "prismkit",
    version,
    about = "Score MT output by force-decoding, evaluate metrics, filter bitext"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score system output, one JSONL record per segment.
    Score(ScoreArgs),
    /// Correlate metric scores with human judgments.
    Eval(EvalArgs),
    /// Filter a bitext with the length, copy, LID and margin rules.
    Filter(FilterArgs),
    /// Kendall tau of w * fwd + (1 - w) * rev over a grid of w.
    Sweep(SweepArgs),
    /// Mean H per sentence-BLEU bin.
    Bias(BiasArgs),
    /// Beam-search outputs from a copy model.
    Generate(GenerateArgs),
    /// Build a copy-channel model or an n-gram LM from text.
    BuildModel(BuildModelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    PrismRef,
    PrismSrc,
    Sentbleu,
    Chrf,
    Lm,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(
            self.to_possible_value()
                .expect("no skipped variants")
                .get_name(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Copymodel,
    Lm,
    Precomputed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Tokenize {
    #[default]
    Whitespace,
    Character,
}

impl From<Tokenize> for TokenizeMode {
    fn from(t: Tokenize) -> Self {
        match t {
            Tokenize::Whitespace => TokenizeMode::Whitespace,
            Tokenize::Character => TokenizeMode::Character,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum BleuSmoothing {
    None,
    #[default]
    Epsilon,
    AddOne,
}

impl From<BleuSmoothing> for Smoothing {
    fn from(s: BleuSmoothing) -> Self {
        match s {
            BleuSmoothing::None => Smoothing::None,
            BleuSmoothing::Epsilon => Smoothing::Epsilon(0.1),
            BleuSmoothing::AddOne => Smoothing::AddOne,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ScoreFormat {
    #[default]
    Jsonl,
    Tsv,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub metric: Metric,
    #[arg(long, value_enum, default_value_t = Backend::Copymodel)]
    pub backend: Backend,
    #[arg(long)]
    pub sys: Option<PathBuf>,
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub src: Option<PathBuf>,
    /// Model JSON. Without it the copymodel backend builds one from the input files.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// JSONL log probabilities for the precomputed backend.
    #[arg(long)]
    pub logprobs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// System name recorded with each score (default: the --sys file stem).
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long, default_value = "und")]
    pub lang: String,
    #[arg(long, default_value = "und")]
    pub src_lang: String,
    #[arg(long, value_enum, default_value_t)]
    pub tokenize: Tokenize,
    #[arg(long, value_enum, default_value_t)]
    pub format: ScoreFormat,
    #[arg(long, value_enum, default_value_t)]
    pub bleu_smoothing: BleuSmoothing,
    #[arg(long, default_value_t = 6)]
    pub chrf_order: usize,
    #[arg(long, default_value_t = 2.0)]
    pub chrf_beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalLevel {
    Segment,
    System,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub level: EvalLevel,
    /// Score files (JSONL, or TSV when the name ends in .tsv).
    #[arg(long, num_args = 1.., required = true)]
    pub scores: Vec<PathBuf>,
    /// DARR TSV (segment level) or `system<TAB>score` TSV (system level).
    #[arg(long)]
    pub judgments: PathBuf,
    /// Bootstrap resamples; 0 disables intervals and significance.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Keep only the K systems with the best human score (system level).
    #[arg(long)]
    pub top_k: Option<usize>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum MarginKind {
    #[default]
    None,
    LengthRatio,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// JSON filter configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "tgt", conflicts_with = "tsv")]
    pub src: Option<PathBuf>,
    #[arg(long, requires = "src")]
    pub tgt: Option<PathBuf>,
    /// `src<TAB>tgt` input instead of two aligned files.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[arg(long, default_value = "und")]
    pub src_lang: String,
    #[arg(long, default_value = "und")]
    pub tgt_lang: String,
    /// `token<TAB>lang` lexicon for the dictionary LID; the LID rule is skipped without it.
    #[arg(long)]
    pub lid_lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub margin: MarginKind,
    /// Prepend `<lang>` to every kept target sentence.
    #[arg(long)]
    pub tag_target: bool,
    /// Also write each kept pair in the reverse direction.
    #[arg(long)]
    pub mirror: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    #[value(name = "H")]
    H,
    #[value(name = "G")]
    G,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub normalization: Norm,
    /// JSONL log probabilities of sys given ref, with `seg_id` and `system`.
    #[arg(long)]
    pub fwd: PathBuf,
    /// JSONL log probabilities of ref given sys.
    #[arg(long)]
    pub rev: PathBuf,
    #[arg(long)]
    pub judgments: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BiasArgs {
    #[arg(long)]
    pub h_scores: PathBuf,
    #[arg(long)]
    pub sbleu: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    #[default]
    None,
    CopyVsBeam,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    /// Longest output considered (default 2|x| + 4).
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub report: ReportKind,
    /// Human paraphrases of the inputs, for the copy-vs-beam report.
    #[arg(long)]
    pub r1: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "und")]
    pub lang: String,
    #[arg(long, value_enum, default_value_t)]
    pub tokenize: Tokenize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Copy,
    Lm,
}

#[derive(Args, Debug)]
pub struct BuildModelArgs {
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    #[arg(long, num_args = 1.., required = true)]
    pub corpus: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub tokenize: Tokenize,
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = 0.1)]
    pub k: f64,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub ins: Option<f64>,
    #[arg(long)]
    pub del_cont: Option<f64>,
    #[arg(long)]
    pub stop_base: Option<f64>,
    #[arg(long)]
    pub stop_decay: Option<f64>,
}

/// Bad flags or inputs that do not fit together; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

macro_rules! usage {
    ($($arg:tt)*) => {
        return Err(anyhow::Error::new($crate::UsageError(format!($($arg)*))))
    };
}
pub(crate) use usage;

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("PRISMKIT_THREADS") {
        let n: usize = match v.trim().parse() {
            Ok(n) if n >= 1 => n,
            _ => usage!("PRISMKIT_THREADS must be a positive integer, got {v:?}"),
        };
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Score(a) => commands::score::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Filter(a) => commands::filter::run(a),
        Command::Sweep(a) => commands::analysis::sweep(a),
        Command::Bias(a) => commands::analysis::bias(a),
        Command::Generate(a) => commands::generate::run(a),
        Command::BuildModel(a) => commands::model::run(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
