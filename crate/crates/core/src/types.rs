//! Domain types shared by every stage: correction instances, tokens,
//! hypotheses, score breakdowns, and the mixture configuration.

use std::error::Error;
use std::fmt;

use crate::scalar::Scalar;

/// Reserved unknown symbol. Characters outside a model's alphabet are mapped
/// onto it so that scoring stays total over open text.
pub const UNK: char = '\u{FFFD}';

/// A source character sequence plus optional reference, the unit of
/// correction and evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionInstance {
    pub id: String,
    pub source: Vec<char>,
    pub reference: Option<Vec<char>>,
}

impl CorrectionInstance {
    pub fn new(id: impl Into<String>, source: &str, reference: Option<&str>) -> Self {
        CorrectionInstance {
            id: id.into(),
            source: source.chars().collect(),
            reference: reference.map(|r| r.chars().collect()),
        }
    }

    /// Character count of the source (Unicode scalar values, never bytes).
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

/// Validation errors for [`CorrectionInstance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceError {
    /// Reference length differs from source length.
    LengthMismatch {
        source_len: usize,
        reference_len: usize,
    },
    /// Source has no characters.
    EmptySource,
    /// Records are line-delimited; embedded newlines would corrupt them.
    EmbeddedNewline,
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::LengthMismatch {
                source_len,
                reference_len,
            } => write!(
                f,
                "reference length {reference_len} does not match source length {source_len}"
            ),
            InstanceError::EmptySource => write!(f, "source is empty"),
            InstanceError::EmbeddedNewline => write!(f, "source contains a newline character"),
        }
    }
}

impl Error for InstanceError {}

/// A [`CorrectionInstance`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedInstance(CorrectionInstance);

impl ValidatedInstance {
    pub fn instance(&self) -> &CorrectionInstance {
        &self.0
    }

    pub fn into_inner(self) -> CorrectionInstance {
        self.0
    }
}

/// Checks the instance invariants: non-empty source, no embedded newlines,
/// and reference (when present) of exactly the same character count.
pub fn validate_instance(inst: CorrectionInstance) -> Result<ValidatedInstance, InstanceError> {
    if inst.source.is_empty() {
        return Err(InstanceError::EmptySource);
    }
    if inst.source.iter().any(|&c| c == '\n' || c == '\r') {
        return Err(InstanceError::EmbeddedNewline);
    }
    if let Some(reference) = &inst.reference {
        if reference.len() != inst.source.len() {
            return Err(InstanceError::LengthMismatch {
                source_len: inst.source.len(),
                reference_len: reference.len(),
            });
        }
    }
    Ok(ValidatedInstance(inst))
}

/// Index into a generative scorer's vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub usize);

/// A vocabulary entry: one or more characters emitted as a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub chars: Vec<char>,
    pub id: TokenId,
}

impl Token {
    /// Character count of the token (ℓ ≥ 1).
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

/// Finite ordered token inventory of a generative scorer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Token>,
}

impl Vocabulary {
    /// Builds a vocabulary from character sequences. Empty sequences are
    /// rejected; ids are assigned in the given order.
    pub fn new<I, T>(entries: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let tokens = entries
            .into_iter()
            .enumerate()
            .map(|(i, entry)| {
                let chars: Vec<char> = entry.as_ref().chars().collect();
                assert!(!chars.is_empty(), "vocabulary tokens must be non-empty");
                Token {
                    chars,
                    id: TokenId(i),
                }
            })
            .collect();
        Vocabulary { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: TokenId) -> &Token {
        &self.tokens[id.0]
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

/// Accumulated decomposed score of a partial output.
///
/// `lm` collects the generative log-probabilities, `dm` the weighted
/// distortion terms (after the α weight and any entropy multiplier), and
/// `sm` the weighted classifier terms (after β and the multiplier). The
/// total is always the sum of the three components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown<S: Scalar> {
    pub lm: S,
    pub dm: S,
    pub sm: S,
    pub total: S,
}

impl<S: Scalar> ScoreBreakdown<S> {
    pub fn zero() -> Self {
        ScoreBreakdown {
            lm: S::zero(),
            dm: S::zero(),
            sm: S::zero(),
            total: S::zero(),
        }
    }

    /// Returns a new breakdown with the given per-component increments
    /// added. The stored total is recomputed from the accumulated
    /// components, so `total == lm + dm + sm` holds exactly.
    pub fn plus(&self, lm: S, dm: S, sm: S) -> Self {
        let lm = self.lm + lm;
        let dm = self.dm + dm;
        let sm = self.sm + sm;
        ScoreBreakdown {
            lm,
            dm,
            sm,
            total: lm + dm + sm,
        }
    }

    /// Re-derives the total from the components.
    pub fn recompute_total(&self) -> S {
        self.lm + self.dm + self.sm
    }

    /// True when any component is the negative-infinity sentinel or NaN;
    /// such hypotheses are eliminated by the decoder rather than erroring.
    pub fn is_impossible(&self) -> bool {
        self.total == S::neg_infinity() || self.total.is_nan()
    }
}

/// One partial equal-length output: the beam-search state.
#[derive(Debug, Clone)]
pub struct Hypothesis<S: Scalar, St> {
    /// Tokens emitted so far.
    pub tokens: Vec<TokenId>,
    /// Output characters emitted so far (concatenation of the tokens).
    pub chars: Vec<char>,
    /// Σℓ over tokens; equals `chars.len()`.
    pub covered: usize,
    pub score: ScoreBreakdown<S>,
    /// Opaque generative-scorer state after consuming `tokens`.
    pub state: St,
}

impl<S: Scalar, St> Hypothesis<S, St> {
    pub fn empty(state: St) -> Self {
        Hypothesis {
            tokens: Vec::new(),
            chars: Vec::new(),
            covered: 0,
            score: ScoreBreakdown::zero(),
            state,
        }
    }
}

/// Per-position candidate construction policy.
///
/// The per-position set always contains the identity character; confusion
/// characters and classifier proposals are unioned in on top, and the set is
/// truncated to `max_set_size` with the identity retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidatePolicy {
    /// Characters drawn from the classifier distribution per position.
    pub top_k_classifier: usize,
    /// Include same-pinyin / similar-pinyin / similar-shape characters.
    pub include_confusion: bool,
    /// Identity membership flag; the builder keeps the identity character
    /// even when this is unset, since every candidate set must contain it.
    pub include_identity: bool,
    /// Upper bound on the per-position set size.
    pub max_set_size: usize,
}

impl Default for CandidatePolicy {
    fn default() -> Self {
        CandidatePolicy {
            top_k_classifier: 8,
            include_confusion: true,
            include_identity: true,
            max_set_size: 16,
        }
    }
}

impl CandidatePolicy {
    /// Identity-only policy: every per-position set is the singleton source
    /// character, so decoding reproduces the input.
    pub fn identity_only() -> Self {
        CandidatePolicy {
            top_k_classifier: 0,
            include_confusion: false,
            include_identity: true,
            max_set_size: 16,
        }
    }
}

/// Decoder configuration: mixture weights, beam size, and feature switches.
/// All log-probabilities are natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureConfig<S: Scalar> {
    /// Weight of the distortion component.
    pub alpha: S,
    /// Weight of the classifier component.
    pub beta: S,
    /// Number of hypotheses retained per frontier (K ≥ 1).
    pub beam_size: usize,
    /// Distortion model on/off.
    pub dm_enabled: bool,
    /// Entropy-based faithfulness reward on/off.
    pub fr_enabled: bool,
    pub candidate_policy: CandidatePolicy,
}

impl<S: Scalar> Default for MixtureConfig<S> {
    fn default() -> Self {
        MixtureConfig {
            alpha: S::from_f64_lossy(0.5),
            beta: S::from_f64_lossy(0.9),
            beam_size: 12,
            dm_enabled: true,
            fr_enabled: true,
            candidate_policy: CandidatePolicy::default(),
        }
    }
}

impl<S: Scalar> MixtureConfig<S> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.beam_size < 1 {
            return Err(ConfigError::BeamSizeZero);
        }
        if self.alpha < S::zero() || !self.alpha.is_finite() {
            return Err(ConfigError::NegativeWeight("alpha"));
        }
        if self.beta < S::zero() || !self.beta.is_finite() {
            return Err(ConfigError::NegativeWeight("beta"));
        }
        Ok(())
    }

    /// Deterministic sort key for grids and reports.
    pub fn sort_key(&self) -> (u64, u64, usize, bool, bool) {
        let a = self.alpha.to_f64().unwrap_or(f64::NAN).to_bits();
        let b = self.beta.to_f64().unwrap_or(f64::NAN).to_bits();
        (a, b, self.beam_size, self.dm_enabled, self.fr_enabled)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    BeamSizeZero,
    NegativeWeight(&'static str),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::BeamSizeZero => write!(f, "beam size must be at least 1"),
            ConfigError::NegativeWeight(name) => {
                write!(f, "{name} must be a finite non-negative number")
            }
        }
    }
}

impl Error for ConfigError {}
