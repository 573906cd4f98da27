//! Machine-translation evaluation by force-decoding.
//!
//! The crate scores MT output with a conditional sequence scorer
//! (`prism_ref` / `prism_src`), evaluates metrics against human judgments,
//! and implements the bitext filtering rules used to build training data for
//! the scorer. Numerical code is generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix it to `f64`, which is what the CLI uses.

pub mod baselines;
pub mod bitextfilter;
pub mod copymodel;
mod error;
pub mod lm;
pub mod metricseval;
mod scalar;
pub mod scoring;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use text::{ngrams, tokenize, NGramBag, TokenSequence, TokenizeMode};

pub type CopyModel = copymodel::CopyChannelModel<f64>;
pub type CopyModelF32 = copymodel::CopyChannelModel<f32>;
pub type ChannelParams = copymodel::ChannelParams<f64>;
pub type LanguageModel = lm::NGramLm<f64>;
pub type DecodeResult = scoring::ForceDecodeResult<f64>;
pub type Interval = metricseval::ConfidenceInterval<f64>;
