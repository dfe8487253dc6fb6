//! End-to-end decoding over the shipped fixtures: real resources, the
//! reference scorers, and the oracle agreeing with the beam.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mixbeam::decoder::MixtureDecoder;
use mixbeam::scorers::conformance;
use mixbeam::scorers::ngram::NGramLM;
use mixbeam::types::{CandidatePolicy, MixtureConfig};
use mixbeam::{
    build_candidates, corpus, load_resources, DistortionTable, NoisyChannelClassifier, Score,
    SimilarityResources,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn open(name: &str) -> BufReader<File> {
    BufReader::new(File::open(fixture(name)).unwrap())
}

fn shipped_resources() -> Arc<SimilarityResources> {
    Arc::new(load_resources(open("pinyin.tsv"), open("shape.tsv"), open("fuzzy.tsv")).unwrap())
}

struct Stack {
    resources: Arc<SimilarityResources>,
    table: DistortionTable<Score>,
    lm: NGramLM<Score>,
    classifier: NoisyChannelClassifier<Score>,
}

fn stack() -> Stack {
    let resources = shipped_resources();
    let table = DistortionTable::default();
    let train = corpus::read_sentences(open("train.txt")).unwrap();
    let extra = corpus::read_sentences(open("tokens.txt")).unwrap();
    let lm = NGramLM::train(&train, 3, 0.005, &extra).unwrap();
    let classifier = NoisyChannelClassifier::new(
        lm.unigram_counts(),
        table.clone(),
        Arc::clone(&resources),
        1.0,
    )
    .unwrap();
    Stack {
        resources,
        table,
        lm,
        classifier,
    }
}

#[test]
fn shipped_confusion_sets_contain_expected_pairs() {
    let res = shipped_resources();
    assert!(
        res.confusion_set('者').contains(&'证'),
        "者 confuses with 证"
    );
    assert!(
        res.confusion_set('水').contains(&'睡'),
        "水 confuses with 睡"
    );
    assert!(
        res.confusion_set('三').contains(&'散'),
        "三 confuses with 散"
    );
    assert!(res.confusion_set('日').contains(&'目'), "shape pair 日/目");
}

#[test]
fn candidate_sets_cover_planted_corrections() {
    let s = stack();
    let source: Vec<char> = "驾驶者".chars().collect();
    let set = build_candidates(
        &source,
        &CandidatePolicy::default(),
        &s.resources,
        &s.classifier,
    )
    .unwrap();
    assert!(
        set.at(2).contains(&'证'),
        "证 reachable at the 者 position: {:?}",
        set.at(2)
    );
    assert!(set.at(2)[0] == '者', "identity first");
    assert!(set.max_size() <= 16);
}

#[test]
fn planted_error_is_restored_and_clean_text_is_kept() {
    let s = stack();
    let config = MixtureConfig::<Score>::default();
    for (source, expected) in [
        ("今天他们去公园三步。", "今天他们去公园散步。"),
        ("晚上医生去商店散步。", "晚上医生去商店散步。"),
    ] {
        let chars: Vec<char> = source.chars().collect();
        let decoder = MixtureDecoder::new(
            &chars,
            &s.lm,
            &s.classifier,
            &config,
            &s.table,
            &s.resources,
        )
        .unwrap();
        let best = decoder.beam_search().unwrap().swap_remove(0);
        let got: String = best.0.into_iter().collect();
        assert_eq!(got, expected);
    }
}

/// On a short sentence with narrowed candidate sets the exhaustive oracle is
/// tractable with the real scorers; the beam must match it once K covers the
/// space.
#[test]
fn beam_matches_oracle_with_real_scorers() {
    let s = stack();
    let mut config = MixtureConfig::<Score> {
        candidate_policy: CandidatePolicy {
            top_k_classifier: 2,
            include_confusion: true,
            include_identity: true,
            max_set_size: 4,
        },
        ..Default::default()
    };
    let chars: Vec<char> = "去公园三步。".chars().collect();
    let probe = MixtureDecoder::new(
        &chars,
        &s.lm,
        &s.classifier,
        &config,
        &s.table,
        &s.resources,
    )
    .unwrap();
    let space = probe.search_space_size();
    assert!(space > 1_000, "space {space} too small to be interesting");
    config.beam_size = space as usize;

    let decoder = MixtureDecoder::new(
        &chars,
        &s.lm,
        &s.classifier,
        &config,
        &s.table,
        &s.resources,
    )
    .unwrap();
    let oracle = decoder.exhaustive_search().unwrap();
    let beam = decoder.beam_search().unwrap();
    assert_eq!(beam[0].0, oracle.0);
    assert!((beam[0].1.total - oracle.1.total).abs() <= 1e-9);
    let restored: String = oracle.0.iter().collect();
    assert_eq!(restored, "去公园散步。");
}

#[test]
fn reference_scorers_meet_their_contracts_on_fixture_text() {
    let s = stack();
    let probe: Vec<mixbeam::TokenId> = vec![
        mixbeam::TokenId(3),
        mixbeam::TokenId(10),
        mixbeam::TokenId(0),
    ];
    conformance::check_generative(&s.lm, &probe);
    let sources: Vec<Vec<char>> = corpus::read_sentences(open("test_clean.txt"))
        .unwrap()
        .into_iter()
        .take(5)
        .map(|l| l.chars().collect())
        .collect();
    conformance::check_classifier(&s.classifier, &sources);
}

#[test]
fn perplexity_on_shipped_corpus_is_finite_and_improves_with_smaller_k() {
    let train = corpus::read_sentences(open("train.txt")).unwrap();
    let mut last = f64::INFINITY;
    for k in [1.0, 0.1, 0.01] {
        let lm: NGramLM<Score> = NGramLM::train(&train, 3, k, &[]).unwrap();
        let ppl = lm.perplexity(&train);
        assert!(ppl.is_finite() && ppl > 1.0);
        assert!(ppl < last, "perplexity {ppl} did not improve at k={k}");
        last = ppl;
    }
}

/// The whole decode path also runs at f32.
#[test]
fn pipeline_is_generic_over_the_scalar() {
    let resources = shipped_resources();
    let table = DistortionTable::<f32>::default();
    let train = vec!["今天天气很好。", "他们去公园散步。", "今天他们去公园散步。"];
    let lm: NGramLM<f32> = NGramLM::train(&train, 2, 0.1f32, &[]).unwrap();
    let classifier = NoisyChannelClassifier::<f32>::new(
        lm.unigram_counts(),
        table.clone(),
        Arc::clone(&resources),
        1.0f32,
    )
    .unwrap();
    let config = MixtureConfig::<f32>::default();
    let chars: Vec<char> = "天气很好。".chars().collect();
    let decoder =
        MixtureDecoder::new(&chars, &lm, &classifier, &config, &table, &resources).unwrap();
    let best = decoder.beam_search().unwrap().swap_remove(0);
    assert_eq!(best.0.len(), chars.len());
    assert!((best.1.total - best.1.recompute_total()).abs() < 1e-3);
}
