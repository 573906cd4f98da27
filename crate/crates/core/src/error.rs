use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "token {token:?} at position {position} of the {side} sequence is not in the vocabulary"
    )]
    OutOfVocabulary {
        token: String,
        position: usize,
        side: &'static str,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("language mismatch: expected {expected:?}, found {found:?}")]
    LangMismatch { expected: String, found: String },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("no score for segment {seg_id:?}, system {system:?}")]
    MissingScore { seg_id: String, system: String },

    #[error("statistic undefined: {0}")]
    Degenerate(&'static str),

    #[error("no hypothesis terminated within {max_len} tokens")]
    NoHypothesis { max_len: usize },

    #[error("bootstrap gave up after {attempts} attempts: {last}")]
    BootstrapExhausted { attempts: usize, last: String },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("no log probabilities for segment {seg_id:?}, direction {direction}")]
    MissingLogProbs { seg_id: String, direction: String },

    #[error("scorer failed: {0}")]
    Scorer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
