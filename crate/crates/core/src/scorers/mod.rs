//! Scorer contracts consumed by the decoder, plus reference implementations.
//!
//! The decoder only sees two interfaces: a generative scorer producing a
//! next-token distribution over a finite vocabulary, and a per-position
//! classifier producing a character distribution given the source sentence.
//! The shipped implementations ([`ngram::NGramLM`], a character n-gram model
//! with add-k smoothing, and [`noisy::NoisyChannelClassifier`], a
//! prior-times-channel scorer) are deliberately small and fast; anything that
//! honors the contracts can stand in for them.

pub mod ngram;
pub mod noisy;
pub mod stub;

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;

use crate::scalar::Scalar;
use crate::types::{Token, TokenId, Vocabulary, UNK};

/// Errors from scorer construction and queries.
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerError {
    EmptyCorpus,
    InvalidOrder {
        order: usize,
    },
    InvalidSmoothing {
        k: f64,
    },
    InvalidTemperature {
        temperature: f64,
    },
    IndexOutOfRange {
        index: usize,
        len: usize,
    },
    SpanOutOfRange {
        end: usize,
        token_len: usize,
        len: usize,
    },
}

impl fmt::Display for ScorerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerError::EmptyCorpus => write!(f, "training corpus is empty"),
            ScorerError::InvalidOrder { order } => write!(f, "order must be >= 1, got {order}"),
            ScorerError::InvalidSmoothing { k } => write!(f, "smoothing k must be > 0, got {k}"),
            ScorerError::InvalidTemperature { temperature } => {
                write!(f, "temperature must be > 0, got {temperature}")
            }
            ScorerError::IndexOutOfRange { index, len } => {
                write!(f, "position {index} out of range for length {len}")
            }
            ScorerError::SpanOutOfRange {
                end,
                token_len,
                len,
            } => write!(
                f,
                "token of length {token_len} ending at {end} does not fit in length {len}"
            ),
        }
    }
}

impl Error for ScorerError {}

/// Generative language scorer over a finite token vocabulary.
///
/// `log_distribution` must exponentiate to a vector summing to 1 within
/// 1e-6, depend only on the state, and be deterministic. States are
/// value-like and cheap to clone; one is forked per beam hypothesis.
pub trait GenerativeScorer<S: Scalar> {
    type State: Clone;

    fn vocabulary(&self) -> &Vocabulary;
    fn initial_state(&self) -> Self::State;
    fn step(&self, state: &Self::State, token: TokenId) -> Self::State;
    /// Natural-log probability for every vocabulary token, in id order.
    fn log_distribution(&self, state: &Self::State) -> Vec<S>;
}

/// Per-position character classifier.
///
/// `log_distribution_at` must exponentiate to 1 within 1e-6 over its
/// support and depend only on `(source, i)`; the decoder computes it once
/// per position and caches it.
pub trait PositionClassifier<S: Scalar> {
    /// Characters the classifier can propose, in a deterministic order.
    fn alphabet(&self) -> &[char];
    fn log_distribution_at(&self, source: &[char], i: usize)
        -> Result<CharLogDist<S>, ScorerError>;
}

/// Log-probability map over a character alphabet. Lookups of characters
/// outside the support fall back to the reserved unknown symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLogDist<S: Scalar> {
    probs: BTreeMap<char, S>,
}

impl<S: Scalar> CharLogDist<S> {
    pub fn new(probs: BTreeMap<char, S>) -> Self {
        CharLogDist { probs }
    }

    /// Log-probability of `c`, falling back to the unknown symbol and then
    /// to negative infinity.
    pub fn log_prob(&self, c: char) -> S {
        match self.probs.get(&c) {
            Some(&lp) => lp,
            None => self
                .probs
                .get(&UNK)
                .copied()
                .unwrap_or_else(S::neg_infinity),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, S)> + '_ {
        self.probs.iter().map(|(&c, &lp)| (c, lp))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Sum of exponentiated entries.
    pub fn prob_mass(&self) -> S {
        self.probs
            .values()
            .fold(S::zero(), |acc, &lp| acc + lp.exp())
    }

    /// Highest-probability character, ties broken by character order.
    pub fn argmax(&self) -> Option<char> {
        self.probs
            .iter()
            .max_by(|(ca, la), (cb, lb)| match la.partial_cmp(lb) {
                Some(std::cmp::Ordering::Equal) | None => cb.cmp(ca),
                Some(ord) => ord,
            })
            .map(|(&c, _)| c)
    }

    /// The `k` highest-probability characters, probability-descending with
    /// ties broken by character order.
    pub fn top_k(&self, k: usize) -> Vec<char> {
        let mut entries: Vec<(char, S)> = self.probs.iter().map(|(&c, &lp)| (c, lp)).collect();
        entries.sort_by(|(ca, la), (cb, lb)| match lb.partial_cmp(la) {
            Some(std::cmp::Ordering::Equal) | None => ca.cmp(cb),
            Some(ord) => ord,
        });
        entries.truncate(k);
        entries.into_iter().map(|(c, _)| c).collect()
    }
}

/// Token-level classifier score: the sum over the token's characters of the
/// per-position log-probabilities, for a token ending at position `end`
/// (exclusive). Characters outside the alphabet contribute the
/// unknown-symbol probability.
pub fn sm_token_logprob<S: Scalar, C: PositionClassifier<S> + ?Sized>(
    cls: &C,
    source: &[char],
    end: usize,
    token: &Token,
) -> Result<S, ScorerError> {
    let len = token.len();
    if end > source.len() || end < len {
        return Err(ScorerError::SpanOutOfRange {
            end,
            token_len: len,
            len: source.len(),
        });
    }
    let mut sum = S::zero();
    for (j, &c) in token.chars.iter().enumerate() {
        let dist = cls.log_distribution_at(source, end - len + j)?;
        sum = sum + dist.log_prob(c);
    }
    Ok(sum)
}

/// Same computation against pre-computed per-position distributions; used by
/// the decoder, which caches one distribution per position.
pub fn sm_token_logprob_cached<S: Scalar>(
    dists: &[CharLogDist<S>],
    end: usize,
    token: &Token,
) -> Result<S, ScorerError> {
    let len = token.len();
    if end > dists.len() || end < len {
        return Err(ScorerError::SpanOutOfRange {
            end,
            token_len: len,
            len: dists.len(),
        });
    }
    let mut sum = S::zero();
    for (j, &c) in token.chars.iter().enumerate() {
        sum = sum + dists[end - len + j].log_prob(c);
    }
    Ok(sum)
}

/// Contract conformance checks, run against every scorer implementation.
pub mod conformance {
    use super::*;

    /// Asserts the generative contract along a probe path: distributions are
    /// vocabulary-sized, exponentiate to 1 within 1e-6, and are a
    /// deterministic function of the state.
    pub fn check_generative<S: Scalar, G: GenerativeScorer<S>>(scorer: &G, probe: &[TokenId]) {
        let vocab_len = scorer.vocabulary().len();
        let mut state = scorer.initial_state();
        for step in 0..=probe.len() {
            let dist = scorer.log_distribution(&state);
            assert_eq!(
                dist.len(),
                vocab_len,
                "distribution length != vocabulary size"
            );
            let mass: f64 = dist
                .iter()
                .map(|lp| lp.exp().to_f64().expect("finite prob"))
                .sum();
            assert!(
                (mass - 1.0).abs() <= 1e-6,
                "generative distribution mass {mass} at step {step}"
            );
            let again = scorer.log_distribution(&state);
            assert_eq!(dist, again, "log_distribution is not deterministic");
            if step < probe.len() {
                state = scorer.step(&state, probe[step]);
            }
        }
    }

    /// Asserts the classifier contract over every position of the given
    /// sources: unit mass within 1e-6, determinism, and source-character
    /// membership in the support.
    pub fn check_classifier<S: Scalar, C: PositionClassifier<S>>(cls: &C, sources: &[Vec<char>]) {
        for source in sources {
            for i in 0..source.len() {
                let dist = cls
                    .log_distribution_at(source, i)
                    .expect("in-range position");
                let mass: f64 = dist
                    .iter()
                    .map(|(_, lp)| lp.exp().to_f64().expect("finite prob"))
                    .sum();
                assert!(
                    (mass - 1.0).abs() <= 1e-6,
                    "classifier distribution mass {mass} at position {i}"
                );
                let again = cls.log_distribution_at(source, i).unwrap();
                assert_eq!(dist, again, "log_distribution_at is not deterministic");
                assert!(
                    dist.log_prob(source[i]).is_finite(),
                    "source character {:?} unscorable at {i}",
                    source[i]
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ln_prob;

    struct TwoPositionStub {
        alphabet: Vec<char>,
        dists: Vec<CharLogDist<f64>>,
    }

    impl PositionClassifier<f64> for TwoPositionStub {
        fn alphabet(&self) -> &[char] {
            &self.alphabet
        }
        fn log_distribution_at(
            &self,
            source: &[char],
            i: usize,
        ) -> Result<CharLogDist<f64>, ScorerError> {
            if i >= source.len() {
                return Err(ScorerError::IndexOutOfRange {
                    index: i,
                    len: source.len(),
                });
            }
            Ok(self.dists[i].clone())
        }
    }

    fn stub() -> TwoPositionStub {
        let d0 = CharLogDist::new(BTreeMap::from([('a', ln_prob(0.5)), ('b', ln_prob(0.5))]));
        let d1 = CharLogDist::new(BTreeMap::from([('a', ln_prob(0.75)), ('b', ln_prob(0.25))]));
        TwoPositionStub {
            alphabet: vec!['a', 'b'],
            dists: vec![d0, d1],
        }
    }

    fn token(s: &str) -> Token {
        Token {
            chars: s.chars().collect(),
            id: TokenId(0),
        }
    }

    #[test]
    fn single_char_token_equals_position_lookup() {
        let cls = stub();
        let source: Vec<char> = "ab".chars().collect();
        let got = sm_token_logprob(&cls, &source, 1, &token("a")).unwrap();
        assert_eq!(got, cls.dists[0].log_prob('a'));
    }

    #[test]
    fn multi_char_token_multiplies_positions() {
        let cls = stub();
        let source: Vec<char> = "ab".chars().collect();
        // 0.5 at position 0 and 0.25 at position 1.
        let got = sm_token_logprob(&cls, &source, 2, &token("ab")).unwrap();
        assert!((got - 0.125_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn token_score_equals_per_char_sum_exactly() {
        let cls = stub();
        let source: Vec<char> = "ab".chars().collect();
        let whole = sm_token_logprob(&cls, &source, 2, &token("ba")).unwrap();
        let first = sm_token_logprob(&cls, &source, 1, &token("b")).unwrap();
        let second = sm_token_logprob(&cls, &source, 2, &token("a")).unwrap();
        assert_eq!(whole, first + second);
    }

    #[test]
    fn span_out_of_range_is_reported() {
        let cls = stub();
        let source: Vec<char> = "ab".chars().collect();
        match sm_token_logprob(&cls, &source, 1, &token("ab")) {
            Err(ScorerError::SpanOutOfRange {
                end: 1,
                token_len: 2,
                len: 2,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unknown_chars_fall_back_to_unk_mass() {
        let dist = CharLogDist::new(BTreeMap::from([('a', ln_prob(0.9)), (UNK, ln_prob(0.1))]));
        assert_eq!(dist.log_prob('z'), ln_prob(0.1));
        let no_unk = CharLogDist::new(BTreeMap::from([('a', ln_prob(1.0))]));
        assert_eq!(no_unk.log_prob('z'), f64::NEG_INFINITY);
    }

    #[test]
    fn top_k_orders_by_probability_then_char() {
        let dist = CharLogDist::new(BTreeMap::from([
            ('c', ln_prob(0.25)),
            ('a', ln_prob(0.25)),
            ('b', ln_prob(0.5)),
        ]));
        assert_eq!(dist.top_k(2), vec!['b', 'a']);
        assert_eq!(dist.argmax(), Some('b'));
    }
}
