//! Equal-length spelling correction by mixture beam-search decoding.
//!
//! The decoder fuses three signals inside beam search: a generative language
//! scorer over tokens, a distortion channel relating source and candidate
//! characters through phonetic/visual similarity, and a per-position
//! character classifier. Scores combine per decoding step as
//!
//! ```text
//! score += log p_lm + (1 + H) * (alpha * log p_dm + beta * log p_sm)
//! ```
//!
//! with `H` the entropy of the next-token distribution (higher uncertainty
//! gives the channel and classifier more say). Outputs always have exactly
//! as many characters as the input.
//!
//! The crate ships desk-scale reference scorers (a character n-gram LM and a
//! noisy-channel classifier), a brute-force oracle for verifying the beam,
//! correction metrics, and a synthetic benchmark generator. All score
//! arithmetic is generic over the floating-point scalar; [`Score`] (`f64`)
//! is the default used by the CLI.

pub mod corpus;
pub mod decoder;
pub mod distortion;
pub mod eval;
pub mod scalar;
pub mod scorers;
pub mod synth;
pub mod types;

/// Default scalar for scores and metrics.
pub type Score = f64;

/// Score breakdown at the default scalar.
pub type Breakdown = types::ScoreBreakdown<Score>;

/// Mixture configuration at the default scalar.
pub type Config = types::MixtureConfig<Score>;

/// Metric report at the default scalar.
pub type Report = eval::MetricReport<Score>;

pub use decoder::{
    build_candidates, classifier_argmax, classifier_argmax_in, entropy, CandidateSet, DecodeError,
    Entropy, MixtureDecoder, TraceRecord,
};
pub use distortion::{
    classify_pair, distortion_logprob, load_resources, token_distortion_logprob, DistortionTable,
    DistortionType, SimilarityResources,
};
pub use eval::{evaluate, evaluate_by_type, sweep, EvalError, EvalTriple, MetricReport};
pub use scalar::Scalar;
pub use scorers::{
    ngram::NGramLM, noisy::NoisyChannelClassifier, sm_token_logprob, GenerativeScorer,
    PositionClassifier, ScorerError,
};
pub use synth::corrupt_corpus;
pub use types::{
    validate_instance, CandidatePolicy, CorrectionInstance, Hypothesis, InstanceError,
    MixtureConfig, ScoreBreakdown, Token, TokenId, ValidatedInstance, Vocabulary, UNK,
};
