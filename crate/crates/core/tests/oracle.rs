//! Randomized decoder checks against the exhaustive oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixbeam::decoder::{CandidateSet, MixtureDecoder};
use mixbeam::scorers::stub::{SeededClassifier, SeededGenerative};
use mixbeam::scorers::GenerativeScorer;
use mixbeam::types::{CandidatePolicy, Hypothesis, MixtureConfig, TokenId};
use mixbeam::{DistortionTable, SimilarityResources, Vocabulary};

const ALPHABET: [char; 5] = ['a', 'b', 'c', 'd', 'e'];

struct Instance {
    source: Vec<char>,
    candidates: CandidateSet,
    vocab: Vocabulary,
    config: MixtureConfig<f64>,
}

fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6);
    let source: Vec<char> = (0..n)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
        .collect();

    let per_position: Vec<Vec<char>> = source
        .iter()
        .map(|&c| {
            let mut set = vec![c];
            for _ in 0..rng.gen_range(0..=2) {
                let extra = ALPHABET[rng.gen_range(0..ALPHABET.len())];
                if !set.contains(&extra) {
                    set.push(extra);
                }
            }
            set
        })
        .collect();
    let candidates = CandidateSet::new(&source, per_position);

    let mut entries: Vec<String> = ALPHABET.iter().map(|c| c.to_string()).collect();
    for _ in 0..3 {
        let pair: String = (0..2)
            .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
            .collect();
        if !entries.contains(&pair) {
            entries.push(pair);
        }
    }
    let vocab = Vocabulary::new(entries);

    let config = MixtureConfig {
        alpha: rng.gen_range(0.0..1.5),
        beta: rng.gen_range(0.0..1.5),
        beam_size: 1, // set per use
        dm_enabled: rng.gen_bool(0.75),
        fr_enabled: rng.gen_bool(0.75),
        candidate_policy: CandidatePolicy::default(),
    };

    Instance {
        source,
        candidates,
        vocab,
        config,
    }
}

fn decoder_for<'a, G: GenerativeScorer<f64>>(
    inst: &'a Instance,
    generative: &'a G,
    classifier: &'a SeededClassifier<f64>,
    config: &'a MixtureConfig<f64>,
    table: &'a DistortionTable<f64>,
    res: &'a SimilarityResources,
) -> MixtureDecoder<'a, f64, G> {
    MixtureDecoder::with_candidates(
        &inst.source,
        generative,
        classifier,
        config,
        table,
        res,
        inst.candidates.clone(),
    )
    .expect("decoder construction")
}

#[test]
fn beam_with_full_width_matches_exhaustive_oracle() {
    let table = DistortionTable::default();
    let res = SimilarityResources::empty();
    for seed in 0..200u64 {
        let inst = random_instance(seed);
        let generative = SeededGenerative::<f64>::new(inst.vocab.clone(), seed ^ 0x5eed);
        let classifier = SeededClassifier::<f64>::new(ALPHABET.to_vec(), seed ^ 0xc1a55);

        let mut config = inst.config.clone();
        let probe = decoder_for(&inst, &generative, &classifier, &config, &table, &res);
        let space = probe.search_space_size();
        assert!(space > 0 && space < 100_000, "seed {seed}: space {space}");
        config.beam_size = space as usize;

        let decoder = decoder_for(&inst, &generative, &classifier, &config, &table, &res);
        let oracle = decoder.exhaustive_search().expect("oracle");
        let beam = decoder.beam_search().expect("beam");
        assert_eq!(beam[0].0, oracle.0, "seed {seed}: outputs differ");
        assert!(
            (beam[0].1.total - oracle.1.total).abs() <= 1e-9,
            "seed {seed}: totals differ: beam {} oracle {}",
            beam[0].1.total,
            oracle.1.total
        );
    }
}

#[test]
fn every_result_is_equal_length_with_consistent_totals() {
    let table = DistortionTable::default();
    let res = SimilarityResources::empty();
    for seed in 200..280u64 {
        let inst = random_instance(seed);
        let generative = SeededGenerative::<f64>::new(inst.vocab.clone(), seed);
        let classifier = SeededClassifier::<f64>::new(ALPHABET.to_vec(), seed);
        let mut config = inst.config.clone();
        config.beam_size = 4;
        let decoder = decoder_for(&inst, &generative, &classifier, &config, &table, &res);
        for (out, score) in decoder.beam_search().expect("beam") {
            assert_eq!(out.len(), inst.source.len(), "seed {seed}");
            assert!(
                (score.total - score.recompute_total()).abs() <= 1e-9,
                "seed {seed}: breakdown total drifted"
            );
        }
    }
}

/// With the distortion model and faithfulness reward off and beta = 0, the
/// decoder must rank purely by language-model score. An independent
/// enumeration over all token paths (scored directly from the scorer's
/// distributions, bypassing the decoder) must agree.
#[test]
fn lm_only_configuration_matches_pure_lm_ranking() {
    let table = DistortionTable::default();
    let res = SimilarityResources::empty();
    for seed in 300..360u64 {
        let inst = random_instance(seed);
        let generative = SeededGenerative::<f64>::new(inst.vocab.clone(), seed);
        let classifier = SeededClassifier::<f64>::new(ALPHABET.to_vec(), seed);
        let mut config = inst.config.clone();
        config.dm_enabled = false;
        config.fr_enabled = false;
        config.beta = 0.0;

        let probe = decoder_for(&inst, &generative, &classifier, &config, &table, &res);
        config.beam_size = probe.search_space_size() as usize;
        let decoder = decoder_for(&inst, &generative, &classifier, &config, &table, &res);
        let got = decoder.beam_search().expect("beam");

        // Independent pure-LM enumeration.
        let mut best: Option<(f64, Vec<char>, Vec<TokenId>)> = None;
        let root: Hypothesis<f64, Vec<TokenId>> = Hypothesis::empty(generative.initial_state());
        let mut stack = vec![(root.state.clone(), Vec::<char>::new(), 0.0f64)];
        while let Some((state, chars, lm)) = stack.pop() {
            if chars.len() == inst.source.len() {
                let key = (lm, chars.clone(), state.clone());
                let better = match &best {
                    Some((b_lm, b_chars, b_tokens)) => {
                        lm > *b_lm
                            || (lm == *b_lm
                                && (chars < *b_chars || (chars == *b_chars && state < *b_tokens)))
                    }
                    None => true,
                };
                if better {
                    best = Some(key);
                }
                continue;
            }
            let dist = generative.log_distribution(&state);
            for token in inst.vocab.tokens() {
                let len = token.len();
                if chars.len() + len > inst.source.len() {
                    continue;
                }
                let fits = token
                    .chars
                    .iter()
                    .enumerate()
                    .all(|(j, c)| inst.candidates.at(chars.len() + j).contains(c));
                if !fits {
                    continue;
                }
                let mut next_chars = chars.clone();
                next_chars.extend(token.chars.iter().copied());
                let mut next_state = state.clone();
                next_state.push(token.id);
                stack.push((next_state, next_chars, lm + dist[token.id.0]));
            }
        }
        let (lm, chars, _) = best.expect("some complete path");
        assert_eq!(got[0].0, chars, "seed {seed}");
        assert!((got[0].1.total - lm).abs() <= 1e-9, "seed {seed}");
        assert_eq!(got[0].1.dm, 0.0, "seed {seed}: dm must be exactly zero");
        assert_eq!(got[0].1.sm, 0.0, "seed {seed}: sm must be exactly zero");
    }
}

/// Widening the beam never lowers the best complete score.
#[test]
fn top_total_is_monotone_in_beam_size() {
    let table = DistortionTable::default();
    let res = SimilarityResources::empty();
    for seed in 500..700u64 {
        let inst = random_instance(seed);
        let generative = SeededGenerative::<f64>::new(inst.vocab.clone(), seed ^ 0xabc);
        let classifier = SeededClassifier::<f64>::new(ALPHABET.to_vec(), seed ^ 0xdef);
        let mut last = f64::NEG_INFINITY;
        for k in [1usize, 2, 4, 8, 12] {
            let mut config = inst.config.clone();
            config.beam_size = k;
            let dec = decoder_for(&inst, &generative, &classifier, &config, &table, &res);
            let top = dec.beam_search().expect("beam")[0].1.total;
            assert!(
                top >= last - 1e-9,
                "seed {seed}: top-1 total fell from {last} to {top} at K={k}"
            );
            last = top;
        }
    }
}

/// A constant-entropy scorer makes the faithfulness reward a uniform
/// rescaling: per extension, the weighted terms with the reward on must be
/// exactly the multiplier times the terms with it off.
#[test]
fn constant_entropy_reward_rescales_mixture_terms_exactly() {
    let table = DistortionTable::default();
    let res = SimilarityResources::empty();
    for seed in 400..440u64 {
        let inst = random_instance(seed);
        // No per-prefix table entries: falls back to uniform everywhere, so
        // the entropy is ln(vocab) at every state.
        let generative = mixbeam::scorers::stub::TableGenerative::<f64>::new(inst.vocab.clone());
        let classifier = SeededClassifier::<f64>::new(ALPHABET.to_vec(), seed);

        let mut on = inst.config.clone();
        on.fr_enabled = true;
        on.beam_size = 2;
        let mut off = on.clone();
        off.fr_enabled = false;

        let dec_on = decoder_for(&inst, &generative, &classifier, &on, &table, &res);
        let dec_off = decoder_for(&inst, &generative, &classifier, &off, &table, &res);

        let root = Hypothesis::empty(GenerativeScorer::<f64>::initial_state(&generative));
        for token in inst.vocab.tokens() {
            let fits = token.len() <= inst.source.len()
                && token
                    .chars
                    .iter()
                    .enumerate()
                    .all(|(j, c)| inst.candidates.at(j).contains(c));
            if !fits {
                continue;
            }
            let (hyp_on, info_on) = dec_on.extend(&root, token.id).unwrap();
            let (hyp_off, info_off) = dec_off.extend(&root, token.id).unwrap();
            let m = info_on.multiplier;
            assert_eq!(info_off.multiplier, 1.0);
            let h = info_on.entropy.unwrap();
            assert!(
                (h - (inst.vocab.len() as f64).ln()).abs() < 1e-12,
                "uniform entropy {h} is ln |vocab|"
            );
            assert_eq!(hyp_on.score.lm, hyp_off.score.lm, "seed {seed}");
            assert_eq!(hyp_on.score.dm, m * hyp_off.score.dm, "seed {seed}");
            assert_eq!(hyp_on.score.sm, m * hyp_off.score.sm, "seed {seed}");
        }
    }
}
