//! Correction metrics: sentence- and character-level precision / recall /
//! F1, false positive rate, per-error-type breakdown, and grid sweeps.
//!
//! Conventions (frozen; the exact definitions matter):
//! - A sentence is predicted-positive iff the prediction differs from the
//!   source, gold-positive iff the reference differs from the source, and
//!   correct iff it is predicted-positive and the prediction equals the
//!   reference exactly.
//! - A character position is a predicted edit iff prediction != source
//!   there, a gold edit iff reference != source, and a correct edit iff
//!   both hold and prediction == reference.
//! - FPR is the fraction of gold-negative sentences the system modified.
//! - 0/0 ratios are reported as 0 with an `undefined` flag instead of
//!   erroring, so degenerate sweep cells stay comparable.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;

use serde::Serialize;

use crate::decoder::MixtureDecoder;
use crate::distortion::{classify_pair, DistortionTable, DistortionType, SimilarityResources};
use crate::scalar::Scalar;
use crate::scorers::{GenerativeScorer, PositionClassifier};
use crate::types::{MixtureConfig, ValidatedInstance};

/// One scored example: equal-length source, reference, and prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTriple {
    pub source: Vec<char>,
    pub reference: Vec<char>,
    pub prediction: Vec<char>,
}

impl EvalTriple {
    pub fn new(source: &str, reference: &str, prediction: &str) -> Self {
        EvalTriple {
            source: source.chars().collect(),
            reference: reference.chars().collect(),
            prediction: prediction.chars().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    LengthMismatch {
        index: usize,
        source: usize,
        reference: usize,
        prediction: usize,
    },
    MissingReference {
        id: String,
    },
    EmptyGrid,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::LengthMismatch { index, source, reference, prediction } => write!(
                f,
                "instance {index}: lengths differ (source {source}, reference {reference}, prediction {prediction})"
            ),
            EvalError::MissingReference { id } => {
                write!(f, "instance {id} has no reference; evaluation requires one")
            }
            EvalError::EmptyGrid => write!(f, "sweep grid is empty"),
        }
    }
}

impl Error for EvalError {}

/// A ratio with its tallies. `0/0` carries `value = 0` and `undefined`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio<S: Scalar> {
    pub value: S,
    pub numerator: u64,
    pub denominator: u64,
    pub undefined: bool,
}

impl<S: Scalar> Ratio<S> {
    fn new(numerator: u64, denominator: u64) -> Self {
        if denominator == 0 {
            Ratio {
                value: S::zero(),
                numerator,
                denominator,
                undefined: true,
            }
        } else {
            Ratio {
                value: S::from_u64(numerator).unwrap() / S::from_u64(denominator).unwrap(),
                numerator,
                denominator,
                undefined: false,
            }
        }
    }
}

/// Harmonic mean of precision and recall; 0 (flagged) when P + R = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FScore<S: Scalar> {
    pub value: S,
    pub undefined: bool,
}

impl<S: Scalar> FScore<S> {
    fn from(p: Ratio<S>, r: Ratio<S>) -> Self {
        let sum = p.value + r.value;
        if sum == S::zero() {
            FScore {
                value: S::zero(),
                undefined: true,
            }
        } else {
            let two = S::from_f64_lossy(2.0);
            FScore {
                value: two * p.value * r.value / sum,
                undefined: false,
            }
        }
    }
}

/// Raw integer tallies behind the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct MetricCounts {
    pub sentences: u64,
    pub sentence_predicted_positive: u64,
    pub sentence_gold_positive: u64,
    pub sentence_correct: u64,
    pub gold_negative_sentences: u64,
    pub false_positive_sentences: u64,
    pub char_positions: u64,
    pub char_predicted_edits: u64,
    pub char_gold_edits: u64,
    pub char_correct_edits: u64,
}

/// Per-distortion-type character-level metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeMetrics<S: Scalar> {
    pub precision: Ratio<S>,
    pub recall: Ratio<S>,
    pub f1: FScore<S>,
    pub predicted_edits: u64,
    pub gold_edits: u64,
    pub correct_edits: u64,
}

/// The full correction report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport<S: Scalar> {
    pub sentence_precision: Ratio<S>,
    pub sentence_recall: Ratio<S>,
    pub sentence_f1: FScore<S>,
    pub char_precision: Ratio<S>,
    pub char_recall: Ratio<S>,
    pub char_f1: FScore<S>,
    pub fpr: Ratio<S>,
    pub counts: MetricCounts,
    pub per_type: Option<BTreeMap<DistortionType, TypeMetrics<S>>>,
}

impl<S: Scalar> MetricReport<S> {
    pub fn with_per_type(mut self, per_type: BTreeMap<DistortionType, TypeMetrics<S>>) -> Self {
        self.per_type = Some(per_type);
        self
    }
}

impl<S: Scalar> fmt::Display for MetricReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn pct<S: Scalar>(v: S) -> f64 {
            v.to_f64().unwrap_or(f64::NAN) * 100.0
        }
        fn mark(undefined: bool) -> &'static str {
            if undefined {
                "*"
            } else {
                ""
            }
        }
        writeln!(f, "level      P        R        F1       FPR")?;
        writeln!(
            f,
            "sentence   {:6.2}{}  {:6.2}{}  {:6.2}{}  {:6.2}{}",
            pct(self.sentence_precision.value),
            mark(self.sentence_precision.undefined),
            pct(self.sentence_recall.value),
            mark(self.sentence_recall.undefined),
            pct(self.sentence_f1.value),
            mark(self.sentence_f1.undefined),
            pct(self.fpr.value),
            mark(self.fpr.undefined),
        )?;
        writeln!(
            f,
            "character  {:6.2}{}  {:6.2}{}  {:6.2}{}",
            pct(self.char_precision.value),
            mark(self.char_precision.undefined),
            pct(self.char_recall.value),
            mark(self.char_recall.undefined),
            pct(self.char_f1.value),
            mark(self.char_f1.undefined),
        )?;
        if let Some(per_type) = &self.per_type {
            writeln!(f, "per-type character F1 (* = undefined):")?;
            for (ty, m) in per_type {
                writeln!(
                    f,
                    "  {:<14} {:6.2}{}  (gold {}, predicted {}, correct {})",
                    ty.label(),
                    pct(m.f1.value),
                    mark(m.f1.undefined),
                    m.gold_edits,
                    m.predicted_edits,
                    m.correct_edits,
                )?;
            }
        }
        Ok(())
    }
}

fn check_lengths(instances: &[EvalTriple]) -> Result<(), EvalError> {
    for (index, t) in instances.iter().enumerate() {
        if t.reference.len() != t.source.len() || t.prediction.len() != t.source.len() {
            return Err(EvalError::LengthMismatch {
                index,
                source: t.source.len(),
                reference: t.reference.len(),
                prediction: t.prediction.len(),
            });
        }
    }
    Ok(())
}

/// Computes the correction metrics over (source, reference, prediction)
/// triples.
pub fn evaluate<S: Scalar>(instances: &[EvalTriple]) -> Result<MetricReport<S>, EvalError> {
    check_lengths(instances)?;
    let mut c = MetricCounts::default();
    for t in instances {
        c.sentences += 1;
        let predicted_positive = t.prediction != t.source;
        let gold_positive = t.reference != t.source;
        if predicted_positive {
            c.sentence_predicted_positive += 1;
        }
        if gold_positive {
            c.sentence_gold_positive += 1;
        } else {
            c.gold_negative_sentences += 1;
            if predicted_positive {
                c.false_positive_sentences += 1;
            }
        }
        if predicted_positive && t.prediction == t.reference {
            c.sentence_correct += 1;
        }

        for i in 0..t.source.len() {
            c.char_positions += 1;
            let predicted = t.prediction[i] != t.source[i];
            let gold = t.reference[i] != t.source[i];
            if predicted {
                c.char_predicted_edits += 1;
            }
            if gold {
                c.char_gold_edits += 1;
            }
            if predicted && gold && t.prediction[i] == t.reference[i] {
                c.char_correct_edits += 1;
            }
        }
    }

    let sentence_precision = Ratio::new(c.sentence_correct, c.sentence_predicted_positive);
    let sentence_recall = Ratio::new(c.sentence_correct, c.sentence_gold_positive);
    let char_precision = Ratio::new(c.char_correct_edits, c.char_predicted_edits);
    let char_recall = Ratio::new(c.char_correct_edits, c.char_gold_edits);
    Ok(MetricReport {
        sentence_f1: FScore::from(sentence_precision, sentence_recall),
        char_f1: FScore::from(char_precision, char_recall),
        sentence_precision,
        sentence_recall,
        char_precision,
        char_recall,
        fpr: Ratio::new(c.false_positive_sentences, c.gold_negative_sentences),
        counts: c,
        per_type: None,
    })
}

/// Bins character-level tallies by the distortion type of each edit: gold
/// edits by `type(source, reference)`, predicted edits by
/// `type(source, prediction)`. The Unrelated bin is the "others" category.
/// All four non-identical types are always present in the result.
pub fn evaluate_by_type<S: Scalar>(
    instances: &[EvalTriple],
    res: &SimilarityResources,
) -> Result<BTreeMap<DistortionType, TypeMetrics<S>>, EvalError> {
    check_lengths(instances)?;
    let bins = [
        DistortionType::SamePinyin,
        DistortionType::SimilarPinyin,
        DistortionType::SimilarShape,
        DistortionType::Unrelated,
    ];
    let mut gold: BTreeMap<DistortionType, u64> = bins.iter().map(|&b| (b, 0)).collect();
    let mut predicted = gold.clone();
    let mut correct = gold.clone();

    for t in instances {
        for i in 0..t.source.len() {
            let is_predicted = t.prediction[i] != t.source[i];
            let is_gold = t.reference[i] != t.source[i];
            if is_gold {
                let ty = classify_pair(t.source[i], t.reference[i], res);
                *gold.get_mut(&ty).expect("edit cannot be identical") += 1;
            }
            if is_predicted {
                let ty = classify_pair(t.source[i], t.prediction[i], res);
                *predicted.get_mut(&ty).expect("edit cannot be identical") += 1;
            }
            if is_predicted && is_gold && t.prediction[i] == t.reference[i] {
                let ty = classify_pair(t.source[i], t.reference[i], res);
                *correct.get_mut(&ty).expect("edit cannot be identical") += 1;
            }
        }
    }

    Ok(bins
        .iter()
        .map(|&ty| {
            let precision = Ratio::new(correct[&ty], predicted[&ty]);
            let recall = Ratio::new(correct[&ty], gold[&ty]);
            let metrics = TypeMetrics {
                f1: FScore::from(precision, recall),
                precision,
                recall,
                predicted_edits: predicted[&ty],
                gold_edits: gold[&ty],
                correct_edits: correct[&ty],
            };
            (ty, metrics)
        })
        .collect())
}

/// One sweep cell: a configuration and its evaluation outcome. Failures are
/// isolated per cell so one bad configuration does not abort the grid.
#[derive(Debug, Clone)]
pub struct SweepCell<S: Scalar> {
    pub config: MixtureConfig<S>,
    pub outcome: Result<MetricReport<S>, String>,
}

/// Decodes the corpus once per grid configuration and evaluates each. The
/// corpus must carry references. Output cells are sorted by configuration.
pub fn sweep<S, G, C>(
    corpus: &[ValidatedInstance],
    generative: &G,
    classifier: &C,
    table: &DistortionTable<S>,
    res: &SimilarityResources,
    grid: &[MixtureConfig<S>],
) -> Result<Vec<SweepCell<S>>, EvalError>
where
    S: Scalar,
    G: GenerativeScorer<S>,
    C: PositionClassifier<S>,
{
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    for v in corpus {
        if v.instance().reference.is_none() {
            return Err(EvalError::MissingReference {
                id: v.instance().id.clone(),
            });
        }
    }

    let mut cells: Vec<SweepCell<S>> = grid
        .iter()
        .map(|config| {
            let outcome = decode_corpus(corpus, generative, classifier, table, res, config)
                .and_then(|triples| evaluate(&triples).map_err(|e| e.to_string()));
            SweepCell {
                config: config.clone(),
                outcome,
            }
        })
        .collect();
    cells.sort_by_key(|cell| cell.config.sort_key());
    Ok(cells)
}

/// Decodes every instance with the given configuration, producing eval
/// triples. Fails on the first decoding error.
pub fn decode_corpus<S, G, C>(
    corpus: &[ValidatedInstance],
    generative: &G,
    classifier: &C,
    table: &DistortionTable<S>,
    res: &SimilarityResources,
    config: &MixtureConfig<S>,
) -> Result<Vec<EvalTriple>, String>
where
    S: Scalar,
    G: GenerativeScorer<S>,
    C: PositionClassifier<S>,
{
    let mut out = Vec::with_capacity(corpus.len());
    for v in corpus {
        let inst = v.instance();
        let decoder = MixtureDecoder::new(&inst.source, generative, classifier, config, table, res)
            .map_err(|e| format!("instance {}: {e}", inst.id))?;
        let best = decoder
            .beam_search()
            .map_err(|e| format!("instance {}: {e}", inst.id))?
            .into_iter()
            .next()
            .expect("beam search returns at least one hypothesis");
        out.push(EvalTriple {
            source: inst.source.clone(),
            reference: inst
                .reference
                .clone()
                .unwrap_or_else(|| inst.source.clone()),
            prediction: best.0,
        });
    }
    Ok(out)
}

// Flat, serializable view of a report for line-delimited output.

#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord {
    pub sentence_precision: f64,
    pub sentence_recall: f64,
    pub sentence_f1: f64,
    pub char_precision: f64,
    pub char_recall: f64,
    pub char_f1: f64,
    pub fpr: f64,
    pub undefined: Vec<String>,
    pub counts: MetricCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_type: Option<BTreeMap<String, TypeRecord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypeRecord {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted_edits: u64,
    pub gold_edits: u64,
    pub correct_edits: u64,
}

impl<S: Scalar> MetricReport<S> {
    pub fn to_record(&self) -> ReportRecord {
        let f = |v: S| v.to_f64().unwrap_or(f64::NAN);
        let mut undefined = Vec::new();
        let mut flag = |name: &str, is: bool| {
            if is {
                undefined.push(name.to_string());
            }
        };
        flag("sentence_precision", self.sentence_precision.undefined);
        flag("sentence_recall", self.sentence_recall.undefined);
        flag("sentence_f1", self.sentence_f1.undefined);
        flag("char_precision", self.char_precision.undefined);
        flag("char_recall", self.char_recall.undefined);
        flag("char_f1", self.char_f1.undefined);
        flag("fpr", self.fpr.undefined);
        ReportRecord {
            sentence_precision: f(self.sentence_precision.value),
            sentence_recall: f(self.sentence_recall.value),
            sentence_f1: f(self.sentence_f1.value),
            char_precision: f(self.char_precision.value),
            char_recall: f(self.char_recall.value),
            char_f1: f(self.char_f1.value),
            fpr: f(self.fpr.value),
            undefined,
            counts: self.counts,
            per_type: self.per_type.as_ref().map(|per_type| {
                per_type
                    .iter()
                    .map(|(ty, m)| {
                        (
                            ty.label().to_string(),
                            TypeRecord {
                                precision: f(m.precision.value),
                                recall: f(m.recall.value),
                                f1: f(m.f1.value),
                                predicted_edits: m.predicted_edits,
                                gold_edits: m.gold_edits,
                                correct_edits: m.correct_edits,
                            },
                        )
                    })
                    .collect()
            }),
        }
    }
}
