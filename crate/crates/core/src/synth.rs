//! Synthetic corruption: turns a clean corpus into a parallel benchmark by
//! independently corrupting each character with a configured probability.
//!
//! When a character is hit, a distortion type is sampled proportionally to
//! the channel table's non-identical mass (same pinyin : similar pinyin :
//! similar shape : unrelated), then a replacement is drawn uniformly from
//! that relation set. Empty relation sets skip the corruption. Everything is
//! driven by a counter-based RNG seeded from the run seed, so output is
//! byte-identical across runs.

use std::error::Error;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distortion::{DistortionTable, DistortionType, SimilarityResources};
use crate::scalar::Scalar;
use crate::types::CorrectionInstance;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    BadErrorRate { rate: f64 },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::BadErrorRate { rate } => {
                write!(f, "error rate must lie in [0, 1], got {rate}")
            }
        }
    }
}

impl Error for SynthError {}

/// Corruption statistics for the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SynthStats {
    pub chars_total: u64,
    pub chars_corrupted: u64,
    /// Corruption draws skipped because the sampled relation set was empty.
    pub skipped_empty_sets: u64,
}

impl SynthStats {
    pub fn achieved_rate(&self) -> f64 {
        if self.chars_total == 0 {
            0.0
        } else {
            self.chars_corrupted as f64 / self.chars_total as f64
        }
    }
}

const SAMPLED_TYPES: [DistortionType; 4] = [
    DistortionType::SamePinyin,
    DistortionType::SimilarPinyin,
    DistortionType::SimilarShape,
    DistortionType::Unrelated,
];

/// Corrupts a clean corpus into parallel (source, reference) instances.
/// References are the clean lines; ids are `synth-NNNNNN` in input order.
pub fn corrupt_corpus<S: Scalar>(
    clean: &[String],
    res: &SimilarityResources,
    table: &DistortionTable<S>,
    seed: u64,
    error_rate: f64,
) -> Result<(Vec<CorrectionInstance>, SynthStats), SynthError> {
    if !(0.0..=1.0).contains(&error_rate) {
        return Err(SynthError::BadErrorRate { rate: error_rate });
    }
    let weights: Vec<f64> = SAMPLED_TYPES
        .iter()
        .map(|&ty| table.prob(ty).to_f64().expect("probability is finite"))
        .collect();
    let weight_sum: f64 = weights.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SynthStats::default();
    let mut instances = Vec::with_capacity(clean.len());
    for (idx, line) in clean.iter().enumerate() {
        let reference: Vec<char> = line.chars().collect();
        let mut source = reference.clone();
        for c in &mut source {
            stats.chars_total += 1;
            if rng.gen::<f64>() >= error_rate {
                continue;
            }
            let mut draw = rng.gen::<f64>() * weight_sum;
            let mut sampled = SAMPLED_TYPES[SAMPLED_TYPES.len() - 1];
            for (&ty, &w) in SAMPLED_TYPES.iter().zip(&weights) {
                if draw < w {
                    sampled = ty;
                    break;
                }
                draw -= w;
            }
            let set = res.relation_set(*c, sampled);
            if set.is_empty() {
                stats.skipped_empty_sets += 1;
                continue;
            }
            let pick = rng.gen_range(0..set.len());
            *c = *set.iter().nth(pick).expect("index within set");
            stats.chars_corrupted += 1;
        }
        instances.push(CorrectionInstance {
            id: format!("synth-{:06}", idx + 1),
            source,
            reference: Some(reference),
        });
    }
    Ok((instances, stats))
}
