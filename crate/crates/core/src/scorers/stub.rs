//! Deterministic stub scorers for tests, oracles, and calibration runs.
//!
//! `TableGenerative` replays explicitly-specified distributions;
//! `SeededGenerative` and `SeededClassifier` derive pseudo-random but fully
//! deterministic distributions from a seed, so randomized suites are
//! reproducible from the seed alone.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::scorers::{CharLogDist, GenerativeScorer, PositionClassifier, ScorerError};
use crate::types::{TokenId, Vocabulary};

/// Generative stub replaying per-prefix log-distributions.
///
/// Prefixes without an entry fall back to the uniform distribution.
#[derive(Debug, Clone)]
pub struct TableGenerative<S: Scalar> {
    vocab: Vocabulary,
    by_prefix: HashMap<Vec<TokenId>, Vec<S>>,
}

impl<S: Scalar> TableGenerative<S> {
    pub fn new(vocab: Vocabulary) -> Self {
        TableGenerative {
            vocab,
            by_prefix: HashMap::new(),
        }
    }

    /// Sets the log-distribution returned after the given token prefix.
    pub fn set(&mut self, prefix: &[TokenId], log_dist: Vec<S>) -> &mut Self {
        assert_eq!(
            log_dist.len(),
            self.vocab.len(),
            "distribution must cover the vocabulary"
        );
        self.by_prefix.insert(prefix.to_vec(), log_dist);
        self
    }

    fn uniform(&self) -> Vec<S> {
        let lp = -S::from_usize(self.vocab.len()).unwrap().ln();
        vec![lp; self.vocab.len()]
    }
}

impl<S: Scalar> GenerativeScorer<S> for TableGenerative<S> {
    type State = Vec<TokenId>;

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn initial_state(&self) -> Vec<TokenId> {
        Vec::new()
    }

    fn step(&self, state: &Vec<TokenId>, token: TokenId) -> Vec<TokenId> {
        let mut next = state.clone();
        next.push(token);
        next
    }

    fn log_distribution(&self, state: &Vec<TokenId>) -> Vec<S> {
        self.by_prefix
            .get(state)
            .cloned()
            .unwrap_or_else(|| self.uniform())
    }
}

fn hash_of(parts: &[u64]) -> u64 {
    let mut h = DefaultHasher::new();
    parts.hash(&mut h);
    h.finish()
}

/// Generative stub with a pseudo-random distribution per prefix, derived
/// deterministically from the seed and the prefix.
#[derive(Debug, Clone)]
pub struct SeededGenerative<S: Scalar> {
    vocab: Vocabulary,
    seed: u64,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> SeededGenerative<S> {
    pub fn new(vocab: Vocabulary, seed: u64) -> Self {
        SeededGenerative {
            vocab,
            seed,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar> GenerativeScorer<S> for SeededGenerative<S> {
    type State = Vec<TokenId>;

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn initial_state(&self) -> Vec<TokenId> {
        Vec::new()
    }

    fn step(&self, state: &Vec<TokenId>, token: TokenId) -> Vec<TokenId> {
        let mut next = state.clone();
        next.push(token);
        next
    }

    fn log_distribution(&self, state: &Vec<TokenId>) -> Vec<S> {
        let mut parts: Vec<u64> = vec![self.seed];
        parts.extend(state.iter().map(|t| t.0 as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(hash_of(&parts));
        let weights: Vec<f64> = (0..self.vocab.len())
            .map(|_| rng.gen_range(0.05..1.0))
            .collect();
        let total: f64 = weights.iter().sum();
        weights
            .into_iter()
            .map(|w| S::from_f64_lossy((w / total).ln()))
            .collect()
    }
}

/// Classifier stub replaying explicit per-position distributions,
/// independent of the source content.
#[derive(Debug, Clone)]
pub struct TableClassifier<S: Scalar> {
    alphabet: Vec<char>,
    dists: Vec<CharLogDist<S>>,
}

impl<S: Scalar> TableClassifier<S> {
    pub fn new(dists: Vec<CharLogDist<S>>) -> Self {
        let mut alphabet: Vec<char> = dists
            .iter()
            .flat_map(|d| d.iter().map(|(c, _)| c))
            .collect();
        alphabet.sort_unstable();
        alphabet.dedup();
        TableClassifier { alphabet, dists }
    }

    /// Position-wise distributions from (char, prob) pairs; probabilities
    /// are used as given (callers decide whether they normalize).
    pub fn from_probs(per_position: Vec<Vec<(char, f64)>>) -> Self {
        let dists = per_position
            .into_iter()
            .map(|pairs| {
                CharLogDist::new(
                    pairs
                        .into_iter()
                        .map(|(c, p)| (c, S::from_f64_lossy(p.ln())))
                        .collect::<BTreeMap<char, S>>(),
                )
            })
            .collect();
        TableClassifier::new(dists)
    }
}

impl<S: Scalar> PositionClassifier<S> for TableClassifier<S> {
    fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    fn log_distribution_at(
        &self,
        source: &[char],
        i: usize,
    ) -> Result<CharLogDist<S>, ScorerError> {
        if i >= source.len() {
            return Err(ScorerError::IndexOutOfRange {
                index: i,
                len: source.len(),
            });
        }
        self.dists
            .get(i)
            .cloned()
            .ok_or(ScorerError::IndexOutOfRange {
                index: i,
                len: self.dists.len(),
            })
    }
}

/// Classifier stub with a pseudo-random distribution per (source, position),
/// derived deterministically from the seed.
#[derive(Debug, Clone)]
pub struct SeededClassifier<S: Scalar> {
    alphabet: Vec<char>,
    seed: u64,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> SeededClassifier<S> {
    pub fn new(mut alphabet: Vec<char>, seed: u64) -> Self {
        alphabet.sort_unstable();
        alphabet.dedup();
        SeededClassifier {
            alphabet,
            seed,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar> PositionClassifier<S> for SeededClassifier<S> {
    fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    fn log_distribution_at(
        &self,
        source: &[char],
        i: usize,
    ) -> Result<CharLogDist<S>, ScorerError> {
        if i >= source.len() {
            return Err(ScorerError::IndexOutOfRange {
                index: i,
                len: source.len(),
            });
        }
        let mut parts: Vec<u64> = vec![self.seed, i as u64];
        parts.extend(source.iter().map(|&c| c as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(hash_of(&parts));
        let weights: Vec<f64> = (0..self.alphabet.len())
            .map(|_| rng.gen_range(0.05..1.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let probs = self
            .alphabet
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| (c, S::from_f64_lossy((w / total).ln())))
            .collect();
        Ok(CharLogDist::new(probs))
    }
}
