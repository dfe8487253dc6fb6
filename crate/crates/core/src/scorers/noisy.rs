//! Noisy-channel position classifier: a unigram prior over characters times
//! a distortion-channel likelihood, sharpened or flattened by a temperature.
//!
//! The reference stand-in for a trained contextual classifier. For position
//! `i` with source character `x`, the score of candidate `y` is
//! `prior(y) * p(type(x, y))^(1/temperature)`, normalized over the alphabet.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::distortion::{classify_pair, DistortionTable, SimilarityResources};
use crate::scalar::Scalar;
use crate::scorers::{CharLogDist, PositionClassifier, ScorerError};
use crate::types::UNK;

#[derive(Debug, Clone)]
pub struct NoisyChannelClassifier<S: Scalar> {
    table: DistortionTable<S>,
    resources: Arc<SimilarityResources>,
    /// Laplace-smoothed log-prior per alphabet character.
    log_prior: BTreeMap<char, S>,
    alphabet: Vec<char>,
    temperature: S,
}

impl<S: Scalar> NoisyChannelClassifier<S> {
    /// Builds the classifier from raw unigram frequencies. The alphabet is
    /// the frequency support plus the reserved unknown symbol; the prior is
    /// add-one smoothed so every alphabet character keeps positive mass.
    pub fn new(
        frequencies: impl IntoIterator<Item = (char, u64)>,
        table: DistortionTable<S>,
        resources: Arc<SimilarityResources>,
        temperature: S,
    ) -> Result<Self, ScorerError> {
        if temperature.is_nan() || temperature <= S::zero() || temperature.is_infinite() {
            return Err(ScorerError::InvalidTemperature {
                temperature: temperature.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut counts: BTreeMap<char, u64> = BTreeMap::new();
        for (c, n) in frequencies {
            *counts.entry(c).or_insert(0) += n;
        }
        counts.entry(UNK).or_insert(0);

        let total: u64 = counts.values().sum();
        let denom = S::from_u64(total).unwrap() + S::from_usize(counts.len()).unwrap();
        let log_prior: BTreeMap<char, S> = counts
            .iter()
            .map(|(&c, &n)| (c, ((S::from_u64(n).unwrap() + S::one()) / denom).ln()))
            .collect();
        let alphabet: Vec<char> = log_prior.keys().copied().collect();

        Ok(NoisyChannelClassifier {
            table,
            resources,
            log_prior,
            alphabet,
            temperature,
        })
    }

    pub fn temperature(&self) -> S {
        self.temperature
    }
}

impl<S: Scalar> PositionClassifier<S> for NoisyChannelClassifier<S> {
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
        let x = source[i];
        let inv_t = S::one() / self.temperature;
        let mut weights: BTreeMap<char, S> = BTreeMap::new();
        let mut max = S::neg_infinity();
        for (&y, &lp) in &self.log_prior {
            let channel = self.table.log_prob(classify_pair(x, y, &self.resources));
            let w = lp + inv_t * channel;
            if w > max {
                max = w;
            }
            weights.insert(y, w);
        }
        let log_z = {
            let sum = weights
                .values()
                .fold(S::zero(), |acc, &w| acc + (w - max).exp());
            max + sum.ln()
        };
        for w in weights.values_mut() {
            *w = *w - log_z;
        }
        Ok(CharLogDist::new(weights))
    }
}
