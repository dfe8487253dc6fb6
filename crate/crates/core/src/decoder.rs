//! Mixture beam-search decoder and the exhaustive oracle.
//!
//! Each decoding step extends a hypothesis with one vocabulary token and adds
//!
//! ```text
//! log p_lm(token | prefix)
//!   + (1 + H) * ( alpha * log p_dm(source slice | token)
//!               + beta  * log p_sm(token | source, position) )
//! ```
//!
//! where `H` is the entropy of the full next-token distribution at the
//! current state (the faithfulness multiplier; 1 replaces `1 + H` when the
//! reward is disabled). Pruning is frontier-local: hypotheses are compared
//! only at equal covered-character counts, and the top K of each frontier
//! survive. Ties break lexicographically on the output characters, then on
//! the token id sequence, so decoding is deterministic everywhere.

use std::cmp::Ordering;
use std::error::Error;
use std::fmt;

use serde::Serialize;

use crate::distortion::{
    token_distortion_logprob, DistortionError, DistortionTable, SimilarityResources,
};
use crate::scalar::{cmp_score_desc, Scalar};
use crate::scorers::{
    sm_token_logprob_cached, CharLogDist, GenerativeScorer, PositionClassifier, ScorerError,
};
use crate::types::{
    CandidatePolicy, ConfigError, Hypothesis, MixtureConfig, ScoreBreakdown, TokenId,
};

/// Default cap on the number of complete paths the exhaustive oracle will
/// score before refusing.
pub const DEFAULT_MAX_ORACLE_PATHS: u128 = 2_000_000;

/// Ordered per-position candidate characters. The source character is
/// always a member of its own position's set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    per_position: Vec<Vec<char>>,
}

impl CandidateSet {
    /// Builds a set from explicit per-position candidates, deduplicating
    /// while preserving order and enforcing identity membership.
    pub fn new(source: &[char], per_position: Vec<Vec<char>>) -> Self {
        assert_eq!(
            source.len(),
            per_position.len(),
            "one candidate set per position"
        );
        let per_position = source
            .iter()
            .zip(per_position)
            .map(|(&identity, mut set)| {
                if !set.contains(&identity) {
                    set.insert(0, identity);
                }
                let mut seen = Vec::with_capacity(set.len());
                for c in set {
                    if !seen.contains(&c) {
                        seen.push(c);
                    }
                }
                seen
            })
            .collect();
        CandidateSet { per_position }
    }

    /// Identity-only candidates.
    pub fn singletons(source: &[char]) -> Self {
        CandidateSet {
            per_position: source.iter().map(|&c| vec![c]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.per_position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_position.is_empty()
    }

    pub fn at(&self, i: usize) -> &[char] {
        &self.per_position[i]
    }

    pub fn max_size(&self) -> usize {
        self.per_position.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Constructs per-position candidates: the identity character, plus the
/// confusion set of the source character, plus the classifier's top-k
/// proposals, truncated to the policy's size bound with identity retained.
///
/// Confusion sets can exceed the size bound by themselves, so members are
/// ranked by the classifier's per-position log-probability (ties by
/// character) and take priority over the classifier's own top-k extras;
/// the identity character always keeps the first slot. The reserved
/// unknown symbol is never proposed.
pub fn build_candidates<S: Scalar, C: PositionClassifier<S>>(
    source: &[char],
    policy: &CandidatePolicy,
    res: &SimilarityResources,
    cls: &C,
) -> Result<CandidateSet, ScorerError> {
    let mut per_position = Vec::with_capacity(source.len());
    for (i, &c) in source.iter().enumerate() {
        let want_confusion = policy.include_confusion;
        let want_top_k = policy.top_k_classifier > 0;
        let mut pool: Vec<char> = Vec::new();
        if want_confusion || want_top_k {
            let dist = cls.log_distribution_at(source, i)?;
            if want_confusion {
                let mut confusion: Vec<char> = res.confusion_set(c).into_iter().collect();
                confusion.sort_by(
                    |&a, &b| match dist.log_prob(b).partial_cmp(&dist.log_prob(a)) {
                        Some(std::cmp::Ordering::Equal) | None => a.cmp(&b),
                        Some(ord) => ord,
                    },
                );
                pool.extend(confusion);
            }
            if want_top_k {
                for other in dist.top_k(policy.top_k_classifier) {
                    if !pool.contains(&other) {
                        pool.push(other);
                    }
                }
            }
            pool.retain(|&x| x != c && x != crate::types::UNK);
        }
        let mut set: Vec<char> = vec![c];
        set.extend(pool);
        set.truncate(policy.max_set_size.max(1));
        per_position.push(set);
    }
    Ok(CandidateSet::new(source, per_position))
}

/// Entropy of a next-token distribution, natural-log units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy<S: Scalar>(S);

impl<S: Scalar> Entropy<S> {
    pub fn value(&self) -> S {
        self.0
    }

    /// The faithfulness multiplier `1 + H`.
    pub fn multiplier(&self) -> S {
        S::one() + self.0
    }
}

/// `-Σ p ln p` with `0 ln 0 = 0`, over a natural-log distribution.
///
/// The distribution must exponentiate to 1 within 1e-6. Tiny negative
/// results from rounding are clamped to zero.
pub fn entropy<S: Scalar>(log_dist: &[S]) -> Result<Entropy<S>, DecodeError> {
    let mut mass = S::zero();
    let mut h = S::zero();
    for &lp in log_dist {
        let p = lp.exp();
        mass = mass + p;
        if p > S::zero() {
            h = h - p * lp;
        }
    }
    let tol = S::from_f64_lossy(1e-6);
    if (mass - S::one()).abs() > tol {
        return Err(DecodeError::NotNormalized {
            mass: mass.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Entropy(h.max(S::zero())))
}

#[derive(Debug)]
pub enum DecodeError {
    /// Token would extend the hypothesis past the source length.
    SpanOverflow {
        covered: usize,
        token_len: usize,
        source_len: usize,
    },
    /// Token character not in the candidate set of the position it covers.
    CandidateViolation {
        position: usize,
        ch: char,
    },
    /// Every complete path was eliminated (zero-probability components).
    NoCompleteHypothesis,
    /// The oracle's path count exceeded its bound.
    SearchSpaceTooLarge {
        paths: u128,
        bound: u128,
    },
    /// A distribution handed to `entropy` did not sum to 1 within 1e-6.
    NotNormalized {
        mass: f64,
    },
    Config(ConfigError),
    Scorer(ScorerError),
    Distortion(DistortionError),
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::SpanOverflow { covered, token_len, source_len } => write!(
                f,
                "token of length {token_len} at covered {covered} overflows source length {source_len}"
            ),
            DecodeError::CandidateViolation { position, ch } => {
                write!(f, "character {ch:?} not in the candidate set at position {position}")
            }
            DecodeError::NoCompleteHypothesis => {
                write!(f, "no complete hypothesis survived decoding")
            }
            DecodeError::SearchSpaceTooLarge { paths, bound } => {
                write!(f, "search space of {paths} paths exceeds bound {bound}")
            }
            DecodeError::NotNormalized { mass } => {
                write!(f, "distribution mass {mass} is not 1 within 1e-6")
            }
            DecodeError::Config(e) => write!(f, "{e}"),
            DecodeError::Scorer(e) => write!(f, "{e}"),
            DecodeError::Distortion(e) => write!(f, "{e}"),
        }
    }
}

impl Error for DecodeError {}

impl From<ConfigError> for DecodeError {
    fn from(e: ConfigError) -> Self {
        DecodeError::Config(e)
    }
}

impl From<ScorerError> for DecodeError {
    fn from(e: ScorerError) -> Self {
        DecodeError::Scorer(e)
    }
}

impl From<DistortionError> for DecodeError {
    fn from(e: DistortionError) -> Self {
        DecodeError::Distortion(e)
    }
}

/// Entropy and multiplier applied when a hypothesis was extended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionInfo<S: Scalar> {
    pub entropy: Option<S>,
    pub multiplier: S,
}

/// One line of the decoder trace: the beam contents after pruning a
/// frontier, with the full score breakdown and the faithfulness multiplier
/// used for the extension that produced each hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    /// Frontier level: characters covered.
    pub covered: usize,
    /// Rank within the pruned frontier (0 is best).
    pub rank: usize,
    /// Output prefix.
    pub prefix: String,
    pub lm: f64,
    pub dm: f64,
    pub sm: f64,
    pub total: f64,
    pub entropy: Option<f64>,
    pub multiplier: Option<f64>,
}

/// A complete decode result: the output characters and their score.
pub type Decoded<S> = (Vec<char>, ScoreBreakdown<S>);

/// An extended hypothesis and the entropy information used to build it.
pub type Extended<S, St> = (Hypothesis<S, St>, ExtensionInfo<S>);

struct BeamItem<S: Scalar, St> {
    hyp: Hypothesis<S, St>,
    ext: Option<ExtensionInfo<S>>,
}

/// The mixture decoder for one source sentence.
///
/// Classifier distributions are computed once per position at construction
/// and cached; generative states are forked per hypothesis. An index of
/// which vocabulary tokens fit the candidate sets at each start position is
/// also precomputed.
pub struct MixtureDecoder<'a, S: Scalar, G: GenerativeScorer<S>> {
    source: &'a [char],
    generative: &'a G,
    config: &'a MixtureConfig<S>,
    table: &'a DistortionTable<S>,
    resources: &'a SimilarityResources,
    candidates: CandidateSet,
    sm_dists: Vec<CharLogDist<S>>,
    /// start position -> token ids whose characters fit the candidate sets.
    matching: Vec<Vec<TokenId>>,
}

impl<'a, S: Scalar, G: GenerativeScorer<S>> MixtureDecoder<'a, S, G> {
    pub fn new<C: PositionClassifier<S>>(
        source: &'a [char],
        generative: &'a G,
        classifier: &C,
        config: &'a MixtureConfig<S>,
        table: &'a DistortionTable<S>,
        resources: &'a SimilarityResources,
    ) -> Result<Self, DecodeError> {
        let candidates = build_candidates(source, &config.candidate_policy, resources, classifier)?;
        Self::with_candidates(
            source, generative, classifier, config, table, resources, candidates,
        )
    }

    /// Uses an explicitly constructed candidate set instead of the policy.
    pub fn with_candidates<C: PositionClassifier<S>>(
        source: &'a [char],
        generative: &'a G,
        classifier: &C,
        config: &'a MixtureConfig<S>,
        table: &'a DistortionTable<S>,
        resources: &'a SimilarityResources,
        candidates: CandidateSet,
    ) -> Result<Self, DecodeError> {
        config.validate()?;
        assert_eq!(
            candidates.len(),
            source.len(),
            "candidate set length mismatch"
        );
        let n = source.len();
        let mut sm_dists = Vec::with_capacity(n);
        for i in 0..n {
            sm_dists.push(classifier.log_distribution_at(source, i)?);
        }

        let vocab = generative.vocabulary();
        let mut matching: Vec<Vec<TokenId>> = vec![Vec::new(); n];
        for token in vocab.tokens() {
            let len = token.len();
            for (start, slot) in matching.iter_mut().enumerate() {
                if start + len > n {
                    break;
                }
                let fits = token
                    .chars
                    .iter()
                    .enumerate()
                    .all(|(j, c)| candidates.at(start + j).contains(c));
                if fits {
                    slot.push(token.id);
                }
            }
        }

        Ok(MixtureDecoder {
            source,
            generative,
            config,
            table,
            resources,
            candidates,
            sm_dists,
            matching,
        })
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    /// Scores one extension. Checks span and candidate membership, then
    /// applies the incremental decomposition with the configured switches:
    /// a disabled distortion model contributes exactly zero, zero weights
    /// contribute exactly zero, and a disabled faithfulness reward uses
    /// multiplier 1.
    pub fn extend(
        &self,
        hyp: &Hypothesis<S, G::State>,
        token: TokenId,
    ) -> Result<Extended<S, G::State>, DecodeError> {
        let dist = self.generative.log_distribution(&hyp.state);
        let info = self.extension_info(&dist)?;
        let next = self.extend_with(hyp, token, &dist, info)?;
        Ok((next, info))
    }

    fn extension_info(&self, dist: &[S]) -> Result<ExtensionInfo<S>, DecodeError> {
        if self.config.fr_enabled {
            let h = entropy(dist)?;
            Ok(ExtensionInfo {
                entropy: Some(h.value()),
                multiplier: h.multiplier(),
            })
        } else {
            Ok(ExtensionInfo {
                entropy: None,
                multiplier: S::one(),
            })
        }
    }

    fn extend_with(
        &self,
        hyp: &Hypothesis<S, G::State>,
        token: TokenId,
        dist: &[S],
        info: ExtensionInfo<S>,
    ) -> Result<Hypothesis<S, G::State>, DecodeError> {
        let tok = self.generative.vocabulary().token(token);
        let len = tok.len();
        let covered = hyp.covered;
        let n = self.source.len();
        if covered + len > n {
            return Err(DecodeError::SpanOverflow {
                covered,
                token_len: len,
                source_len: n,
            });
        }
        for (j, &c) in tok.chars.iter().enumerate() {
            if !self.candidates.at(covered + j).contains(&c) {
                return Err(DecodeError::CandidateViolation {
                    position: covered + j,
                    ch: c,
                });
            }
        }

        let lm_inc = dist[token.0];
        let m = info.multiplier;
        let dm_inc = if self.config.dm_enabled && self.config.alpha > S::zero() {
            let d = token_distortion_logprob(
                &self.source[covered..covered + len],
                tok,
                self.table,
                self.resources,
            )?;
            m * (self.config.alpha * d)
        } else {
            S::zero()
        };
        let sm_inc = if self.config.beta > S::zero() {
            let s = sm_token_logprob_cached(&self.sm_dists, covered + len, tok)?;
            m * (self.config.beta * s)
        } else {
            S::zero()
        };

        let mut tokens = hyp.tokens.clone();
        tokens.push(token);
        let mut chars = hyp.chars.clone();
        chars.extend(tok.chars.iter().copied());
        Ok(Hypothesis {
            tokens,
            chars,
            covered: covered + len,
            score: hyp.score.plus(lm_inc, dm_inc, sm_inc),
            state: self.generative.step(&hyp.state, token),
        })
    }

    fn cmp_items(a: &BeamItem<S, G::State>, b: &BeamItem<S, G::State>) -> Ordering {
        cmp_score_desc(a.hyp.score.total, b.hyp.score.total)
            .then_with(|| a.hyp.chars.cmp(&b.hyp.chars))
            .then_with(|| a.hyp.tokens.cmp(&b.hyp.tokens))
    }

    /// Beam search: returns up to K complete hypotheses, best first.
    pub fn beam_search(&self) -> Result<Vec<Decoded<S>>, DecodeError> {
        self.run_beam(None)
    }

    /// Beam search that also records the pruned beam contents per frontier.
    pub fn beam_search_traced(&self) -> Result<(Vec<Decoded<S>>, Vec<TraceRecord>), DecodeError> {
        let mut trace = Vec::new();
        let out = self.run_beam(Some(&mut trace))?;
        Ok((out, trace))
    }

    fn run_beam(
        &self,
        mut trace: Option<&mut Vec<TraceRecord>>,
    ) -> Result<Vec<Decoded<S>>, DecodeError> {
        let n = self.source.len();
        let k = self.config.beam_size;
        let mut frontiers: Vec<Vec<BeamItem<S, G::State>>> = Vec::with_capacity(n + 1);
        frontiers.resize_with(n + 1, Vec::new);
        frontiers[0].push(BeamItem {
            hyp: Hypothesis::empty(self.generative.initial_state()),
            ext: None,
        });

        for covered in 0..=n {
            let mut frontier = std::mem::take(&mut frontiers[covered]);
            frontier.sort_by(Self::cmp_items);
            frontier.truncate(k);
            if let Some(trace) = trace.as_deref_mut() {
                if covered > 0 {
                    trace.extend(
                        frontier
                            .iter()
                            .enumerate()
                            .map(|(rank, item)| trace_record(covered, rank, item)),
                    );
                }
            }
            if covered == n {
                if frontier.is_empty() {
                    return Err(DecodeError::NoCompleteHypothesis);
                }
                return Ok(frontier
                    .into_iter()
                    .map(|item| (item.hyp.chars, item.hyp.score))
                    .collect());
            }

            for item in &frontier {
                if self.matching[covered].is_empty() {
                    continue;
                }
                let dist = self.generative.log_distribution(&item.hyp.state);
                let info = self.extension_info(&dist)?;
                for &token in &self.matching[covered] {
                    let next = self.extend_with(&item.hyp, token, &dist, info)?;
                    if next.score.is_impossible() {
                        continue;
                    }
                    let level = next.covered;
                    frontiers[level].push(BeamItem {
                        hyp: next,
                        ext: Some(info),
                    });
                }
            }
        }
        unreachable!("loop returns at covered == n");
    }

    /// Number of complete token paths consistent with the candidate sets.
    pub fn search_space_size(&self) -> u128 {
        let n = self.source.len();
        let mut paths = vec![0u128; n + 1];
        paths[n] = 1;
        for start in (0..n).rev() {
            let mut total = 0u128;
            for &token in &self.matching[start] {
                let len = self.generative.vocabulary().token(token).len();
                total = total.saturating_add(paths[start + len]);
            }
            paths[start] = total;
        }
        paths[0]
    }

    /// Brute-force oracle: enumerates every complete token path, scores it
    /// with the same incremental rule, and returns the maximum under the
    /// beam tie-break. Refuses when the path count exceeds the default
    /// bound.
    pub fn exhaustive_search(&self) -> Result<Decoded<S>, DecodeError> {
        self.exhaustive_search_bounded(DEFAULT_MAX_ORACLE_PATHS)
    }

    pub fn exhaustive_search_bounded(&self, bound: u128) -> Result<Decoded<S>, DecodeError> {
        let paths = self.search_space_size();
        if paths > bound {
            return Err(DecodeError::SearchSpaceTooLarge { paths, bound });
        }
        let mut best: Option<BeamItem<S, G::State>> = None;
        let root = Hypothesis::empty(self.generative.initial_state());
        self.exhaust(&root, &mut best)?;
        match best {
            Some(item) => Ok((item.hyp.chars, item.hyp.score)),
            None => Err(DecodeError::NoCompleteHypothesis),
        }
    }

    fn exhaust(
        &self,
        hyp: &Hypothesis<S, G::State>,
        best: &mut Option<BeamItem<S, G::State>>,
    ) -> Result<(), DecodeError> {
        let covered = hyp.covered;
        if covered == self.source.len() {
            let candidate = BeamItem {
                hyp: hyp.clone(),
                ext: None,
            };
            let better = match best {
                Some(b) => Self::cmp_items(&candidate, b) == Ordering::Less,
                None => true,
            };
            if better {
                *best = Some(candidate);
            }
            return Ok(());
        }
        if self.matching[covered].is_empty() {
            return Ok(());
        }
        let dist = self.generative.log_distribution(&hyp.state);
        let info = self.extension_info(&dist)?;
        for &token in &self.matching[covered] {
            let next = self.extend_with(hyp, token, &dist, info)?;
            if next.score.is_impossible() {
                continue;
            }
            self.exhaust(&next, best)?;
        }
        Ok(())
    }
}

fn trace_record<S: Scalar, St>(covered: usize, rank: usize, item: &BeamItem<S, St>) -> TraceRecord {
    let f = |x: S| x.to_f64().unwrap_or(f64::NAN);
    TraceRecord {
        covered,
        rank,
        prefix: item.hyp.chars.iter().collect(),
        lm: f(item.hyp.score.lm),
        dm: f(item.hyp.score.dm),
        sm: f(item.hyp.score.sm),
        total: f(item.hyp.score.total),
        entropy: item.ext.and_then(|e| e.entropy.map(f)),
        multiplier: item.ext.map(|e| f(e.multiplier)),
    }
}

/// Per-position classifier argmax over its full alphabet: the
/// classifier-only correction baseline.
pub fn classifier_argmax<S: Scalar, C: PositionClassifier<S>>(
    cls: &C,
    source: &[char],
) -> Result<Vec<char>, ScorerError> {
    let mut out = Vec::with_capacity(source.len());
    for i in 0..source.len() {
        let dist = cls.log_distribution_at(source, i)?;
        out.push(dist.argmax().unwrap_or(source[i]));
    }
    Ok(out)
}

/// Per-position classifier argmax restricted to the candidate sets.
pub fn classifier_argmax_in<S: Scalar, C: PositionClassifier<S>>(
    cls: &C,
    source: &[char],
    candidates: &CandidateSet,
) -> Result<Vec<char>, ScorerError> {
    let mut out = Vec::with_capacity(source.len());
    for i in 0..source.len() {
        let dist = cls.log_distribution_at(source, i)?;
        let best = candidates
            .at(i)
            .iter()
            .copied()
            .max_by(
                |&a, &b| match dist.log_prob(a).partial_cmp(&dist.log_prob(b)) {
                    Some(Ordering::Equal) | None => b.cmp(&a),
                    Some(ord) => ord,
                },
            )
            .unwrap_or(source[i]);
        out.push(best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ln_prob;
    use crate::scorers::stub::{TableClassifier, TableGenerative};
    use crate::types::Vocabulary;
    use std::collections::BTreeMap;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn entropy_of_uniform_is_ln_m() {
        for m in [2usize, 4, 7] {
            let lp = -(m as f64).ln();
            let dist = vec![lp; m];
            let h = entropy(&dist).unwrap().value();
            assert!((h - (m as f64).ln()).abs() < 1e-12, "m={m}, h={h}");
        }
        let four = vec![-(4f64).ln(); 4];
        assert!((entropy(&four).unwrap().value() - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn entropy_of_one_hot_is_zero() {
        let dist = vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert_eq!(entropy(&dist).unwrap().value(), 0.0);
    }

    #[test]
    fn entropy_hand_example() {
        let dist = vec![ln_prob(0.5), ln_prob(0.25), ln_prob(0.25)];
        let h = entropy(&dist).unwrap().value();
        assert!((h - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!((h - 1.0397).abs() < 1e-4);
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        let dist = vec![ln_prob(0.5), ln_prob(0.2)];
        assert!(matches!(
            entropy(&dist),
            Err(DecodeError::NotNormalized { .. })
        ));
    }

    #[test]
    fn candidate_set_always_contains_identity() {
        let source = chars("ab");
        let set = CandidateSet::new(&source, vec![vec!['x'], vec!['b', 'y', 'b']]);
        assert_eq!(set.at(0), &['a', 'x']);
        assert_eq!(set.at(1), &['b', 'y']);
    }

    #[test]
    fn build_candidates_identity_only() {
        let source = chars("水饺");
        let cls = TableClassifier::<f64>::from_probs(vec![vec![('水', 1.0)], vec![('饺', 1.0)]]);
        let set = build_candidates(
            &source,
            &CandidatePolicy::identity_only(),
            &SimilarityResources::empty(),
            &cls,
        )
        .unwrap();
        assert_eq!(set.at(0), &['水']);
        assert_eq!(set.at(1), &['饺']);
    }

    #[test]
    fn build_candidates_adds_classifier_top_k() {
        let source = chars("a");
        let cls = TableClassifier::<f64>::from_probs(vec![vec![('b', 0.9), ('a', 0.1)]]);
        let policy = CandidatePolicy {
            top_k_classifier: 1,
            include_confusion: false,
            include_identity: true,
            max_set_size: 16,
        };
        let set = build_candidates(&source, &policy, &SimilarityResources::empty(), &cls).unwrap();
        assert_eq!(set.at(0), &['a', 'b']);
    }

    #[test]
    fn build_candidates_respects_size_bound() {
        let source = chars("a");
        let cls = TableClassifier::<f64>::from_probs(vec![vec![
            ('b', 0.4),
            ('c', 0.3),
            ('d', 0.2),
            ('a', 0.1),
        ]]);
        let policy = CandidatePolicy {
            top_k_classifier: 3,
            include_confusion: false,
            include_identity: true,
            max_set_size: 2,
        };
        let set = build_candidates(&source, &policy, &SimilarityResources::empty(), &cls).unwrap();
        assert_eq!(set.at(0).len(), 2);
        assert_eq!(set.at(0)[0], 'a'); // identity retained under truncation
    }

    fn simple_decoder_parts(
        alphabet: &[&str],
    ) -> (
        Vocabulary,
        TableClassifier<f64>,
        DistortionTable<f64>,
        SimilarityResources,
    ) {
        let vocab = Vocabulary::new(alphabet.to_vec());
        let cls = TableClassifier::<f64>::from_probs(vec![
            vec![('a', 0.5), ('b', 0.5)],
            vec![('a', 0.5), ('b', 0.5)],
        ]);
        (
            vocab,
            cls,
            DistortionTable::default(),
            SimilarityResources::empty(),
        )
    }

    #[test]
    fn singleton_candidates_reproduce_source() {
        let source = chars("ab");
        let (vocab, cls, table, res) = simple_decoder_parts(&["a", "b"]);
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            candidate_policy: CandidatePolicy::identity_only(),
            ..Default::default()
        };
        let dec = MixtureDecoder::new(&source, &gen, &cls, &config, &table, &res).unwrap();
        let out = dec.beam_search().unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, source);
    }

    #[test]
    fn extend_rejects_span_overflow_and_candidate_violation() {
        let source = chars("ab");
        let vocab = Vocabulary::new(["a", "b", "zz", "q"]);
        let cls = TableClassifier::<f64>::from_probs(vec![vec![('a', 1.0)], vec![('b', 1.0)]]);
        let table = DistortionTable::default();
        let res = SimilarityResources::empty();
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            candidate_policy: CandidatePolicy::identity_only(),
            ..Default::default()
        };
        let dec = MixtureDecoder::new(&source, &gen, &cls, &config, &table, &res).unwrap();
        let root = Hypothesis::empty(gen.initial_state());

        // 'q' is not a candidate anywhere.
        match dec.extend(&root, TokenId(3)) {
            Err(DecodeError::CandidateViolation {
                position: 0,
                ch: 'q',
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        // a then zz would overflow.
        let (one, _) = dec.extend(&root, TokenId(0)).unwrap();
        match dec.extend(&one, TokenId(2)) {
            Err(DecodeError::SpanOverflow {
                covered: 1,
                token_len: 2,
                source_len: 2,
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn zero_weights_leave_only_lm_term() {
        let source = chars("ab");
        let (vocab, cls, table, res) = simple_decoder_parts(&["a", "b"]);
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            alpha: 0.0,
            beta: 0.0,
            candidate_policy: CandidatePolicy::identity_only(),
            ..Default::default()
        };
        let dec = MixtureDecoder::new(&source, &gen, &cls, &config, &table, &res).unwrap();
        let root = Hypothesis::empty(gen.initial_state());
        let (hyp, _) = dec.extend(&root, TokenId(0)).unwrap();
        assert_eq!(hyp.score.dm, 0.0);
        assert_eq!(hyp.score.sm, 0.0);
        assert_eq!(hyp.score.total, hyp.score.lm);
        assert_eq!(hyp.score.lm, ln_prob(0.5));
    }

    #[test]
    fn disabled_dm_contributes_exactly_zero() {
        let source = chars("ab");
        let (vocab, cls, table, res) = simple_decoder_parts(&["a", "b"]);
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            dm_enabled: false,
            fr_enabled: false,
            candidate_policy: CandidatePolicy::identity_only(),
            ..Default::default()
        };
        let dec = MixtureDecoder::new(&source, &gen, &cls, &config, &table, &res).unwrap();
        let root = Hypothesis::empty(gen.initial_state());
        let (hyp, info) = dec.extend(&root, TokenId(0)).unwrap();
        assert_eq!(hyp.score.dm, 0.0);
        assert_eq!(info.multiplier, 1.0);
        // increment = lm + beta * sm with multiplier 1
        let expected_sm = 0.9 * ln_prob(0.5);
        assert!((hyp.score.sm - expected_sm).abs() < 1e-15);
    }

    #[test]
    fn equal_length_guarantee_holds() {
        let source = chars("aba");
        let vocab = Vocabulary::new(["a", "b", "ab", "ba"]);
        let cls = TableClassifier::<f64>::from_probs(vec![
            vec![('a', 0.5), ('b', 0.5)],
            vec![('a', 0.5), ('b', 0.5)],
            vec![('a', 0.5), ('b', 0.5)],
        ]);
        let table = DistortionTable::default();
        let res = SimilarityResources::empty();
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            candidate_policy: CandidatePolicy {
                top_k_classifier: 2,
                include_confusion: false,
                include_identity: true,
                max_set_size: 4,
            },
            beam_size: 3,
            ..Default::default()
        };
        let dec = MixtureDecoder::new(&source, &gen, &cls, &config, &table, &res).unwrap();
        for (out, score) in dec.beam_search().unwrap() {
            assert_eq!(out.len(), source.len());
            assert!((score.total - score.recompute_total()).abs() < 1e-9);
        }
    }

    #[test]
    fn search_space_size_counts_tokenizations() {
        // n=2, candidates {a,b} per position, tokens a,b plus 2-char tokens
        // over {a,b}: paths = 4 (single-single) + 4 (one double) = 8.
        let source = chars("ab");
        let vocab = Vocabulary::new(["a", "b", "aa", "ab", "ba", "bb"]);
        let cls = TableClassifier::<f64>::from_probs(vec![
            vec![('a', 0.5), ('b', 0.5)],
            vec![('a', 0.5), ('b', 0.5)],
        ]);
        let table = DistortionTable::default();
        let res = SimilarityResources::empty();
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig::default();
        let candidates = CandidateSet::new(&source, vec![vec!['a', 'b'], vec!['a', 'b']]);
        let dec =
            MixtureDecoder::with_candidates(&source, &gen, &cls, &config, &table, &res, candidates)
                .unwrap();
        assert_eq!(dec.search_space_size(), 8);
    }

    #[test]
    fn four_positions_three_candidates_is_81_paths_and_beam_matches() {
        // Single-character tokens only: the oracle scores exactly 3^4 = 81
        // sequences, and a beam wide enough to hold them all agrees.
        let source = chars("abca");
        let vocab = Vocabulary::new(["a", "b", "c"]);
        let cls = TableClassifier::<f64>::from_probs(
            (0..4)
                .map(|i| {
                    vec![
                        ('a', 0.2 + 0.1 * i as f64),
                        ('b', 0.5 - 0.05 * i as f64),
                        ('c', 0.3 - 0.05 * i as f64),
                    ]
                })
                .collect(),
        );
        let table = DistortionTable::default();
        let res = SimilarityResources::empty();
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            beam_size: 81,
            ..Default::default()
        };
        let per_position = vec![vec!['a', 'b', 'c']; 4];
        let candidates = CandidateSet::new(&source, per_position);
        let dec =
            MixtureDecoder::with_candidates(&source, &gen, &cls, &config, &table, &res, candidates)
                .unwrap();
        assert_eq!(dec.search_space_size(), 81);
        let oracle = dec.exhaustive_search().unwrap();
        let beam = dec.beam_search().unwrap();
        assert_eq!(beam[0].0, oracle.0);
        assert!((beam[0].1.total - oracle.1.total).abs() <= 1e-9);
    }

    #[test]
    fn oracle_bound_is_enforced() {
        let source = chars("ab");
        let (vocab, cls, table, res) = simple_decoder_parts(&["a", "b"]);
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig::default();
        let candidates = CandidateSet::new(&source, vec![vec!['a', 'b'], vec!['a', 'b']]);
        let dec =
            MixtureDecoder::with_candidates(&source, &gen, &cls, &config, &table, &res, candidates)
                .unwrap();
        match dec.exhaustive_search_bounded(3) {
            Err(DecodeError::SearchSpaceTooLarge { paths: 4, bound: 3 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(dec.exhaustive_search().is_ok());
    }

    #[test]
    fn exhaustive_on_singletons_returns_source() {
        let source = chars("ab");
        let (vocab, cls, table, res) = simple_decoder_parts(&["a", "b"]);
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            candidate_policy: CandidatePolicy::identity_only(),
            ..Default::default()
        };
        let dec = MixtureDecoder::new(&source, &gen, &cls, &config, &table, &res).unwrap();
        let (out, _) = dec.exhaustive_search().unwrap();
        assert_eq!(out, source);
    }

    #[test]
    fn huge_beta_matches_candidate_restricted_argmax() {
        let source = chars("ab");
        let vocab = Vocabulary::new(["a", "b", "x", "y"]);
        let cls = TableClassifier::<f64>::from_probs(vec![
            vec![('a', 0.1), ('b', 0.2), ('x', 0.7)],
            vec![('a', 0.3), ('b', 0.1), ('y', 0.6)],
        ]);
        let table = DistortionTable::default();
        let res = SimilarityResources::empty();
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            beta: 1e6,
            beam_size: 8,
            ..Default::default()
        };
        let candidates = CandidateSet::new(&source, vec![vec!['a', 'b', 'x'], vec!['a', 'b', 'y']]);
        let dec = MixtureDecoder::with_candidates(
            &source,
            &gen,
            &cls,
            &config,
            &table,
            &res,
            candidates.clone(),
        )
        .unwrap();
        let out = dec.beam_search().unwrap();
        let argmax = classifier_argmax_in(&cls, &source, &candidates).unwrap();
        assert_eq!(out[0].0, argmax);
        assert_eq!(out[0].0, chars("xy"));
    }

    #[test]
    fn neg_infinity_candidates_are_eliminated() {
        // classifier assigns probability 0 to 'b' at position 1; with huge
        // beta the 'b' path collapses to -inf and is dropped, not an error.
        let source = chars("ab");
        let vocab = Vocabulary::new(["a", "b"]);
        let mut probs1 = BTreeMap::new();
        probs1.insert('a', ln_prob(1.0));
        probs1.insert('b', ln_prob(0.0));
        let cls = TableClassifier::<f64>::new(vec![
            CharLogDist::new(BTreeMap::from([('a', ln_prob(0.5)), ('b', ln_prob(0.5))])),
            CharLogDist::new(probs1),
        ]);
        let table = DistortionTable::default();
        let res = SimilarityResources::empty();
        let gen = TableGenerative::<f64>::new(vocab);
        let config = MixtureConfig {
            beam_size: 4,
            ..Default::default()
        };
        let candidates = CandidateSet::new(&source, vec![vec!['a'], vec!['a', 'b']]);
        let dec =
            MixtureDecoder::with_candidates(&source, &gen, &cls, &config, &table, &res, candidates)
                .unwrap();
        let out = dec.beam_search().unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, chars("aa"));
    }

    #[test]
    fn classifier_argmax_over_alphabet() {
        let cls = TableClassifier::<f64>::from_probs(vec![
            vec![('a', 0.2), ('b', 0.8)],
            vec![('a', 0.9), ('b', 0.1)],
        ]);
        let source = chars("ab");
        assert_eq!(classifier_argmax(&cls, &source).unwrap(), chars("ba"));
    }
}
