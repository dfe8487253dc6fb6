//! Shared pipeline assembly: resource and model loading, classifier
//! construction, and mixture-configuration resolution.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;

use mixbeam::scorers::ngram::NGramLM;
use mixbeam::types::CandidatePolicy;
use mixbeam::{
    load_resources, Config, DistortionTable, NoisyChannelClassifier, Score, SimilarityResources,
};

use crate::config::Resolver;
use crate::CliError;

#[derive(Debug, Args)]
pub struct ResourceArgs {
    /// Pinyin table: `char TAB syllable[,syllable...]`
    #[arg(long, value_name = "FILE")]
    pub pinyin: PathBuf,
    /// Shape-similarity table: `char TAB char[,char...]`
    #[arg(long, value_name = "FILE")]
    pub shape: PathBuf,
    /// Fuzzy syllable-component pairs: `a TAB b`
    #[arg(long, value_name = "FILE")]
    pub fuzzy: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct MixtureArgs {
    /// Distortion-model weight (default 0.5)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Classifier weight (default 0.9)
    #[arg(long)]
    pub beta: Option<f64>,
    /// Beam size K (default 12)
    #[arg(long, short = 'K')]
    pub beam_size: Option<usize>,
    /// Disable the distortion model
    #[arg(long)]
    pub no_dm: bool,
    /// Disable the entropy-based faithfulness reward
    #[arg(long)]
    pub no_fr: bool,
    /// Classifier proposals per position (default 8)
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Per-position candidate-set bound (default 16)
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Do not add confusion-set characters to the candidates
    #[arg(long)]
    pub no_confusion: bool,
    /// Classifier temperature (default 1.0)
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Distortion probabilities: identical,same_pinyin,similar_pinyin,similar_shape,unrelated
    #[arg(long, value_name = "P1,P2,P3,P4,P5")]
    pub dm_table: Option<String>,
}

pub struct MixtureSettings {
    pub config: Config,
    pub temperature: Score,
    pub table: DistortionTable<Score>,
}

pub fn resolve_mixture(
    args: &MixtureArgs,
    resolver: &mut Resolver,
) -> Result<MixtureSettings, CliError> {
    let alpha = resolver.value(args.alpha, "alpha", 0.5)?;
    let beta = resolver.value(args.beta, "beta", 0.9)?;
    let beam_size = resolver.value(args.beam_size, "beam_size", 12)?;
    let dm_enabled = resolver.flag_bool(args.no_dm, "dm", true)?;
    let fr_enabled = resolver.flag_bool(args.no_fr, "fr", true)?;
    let top_k = resolver.value(args.top_k, "top_k", 8)?;
    let max_candidates = resolver.value(args.max_candidates, "max_candidates", 16)?;
    let confusion = resolver.flag_bool(args.no_confusion, "confusion", true)?;
    let temperature = resolver.value(args.temperature, "temperature", 1.0)?;
    let table_spec = resolver.value(args.dm_table.clone(), "dm_table", String::from("default"))?;

    let table = if table_spec == "default" {
        DistortionTable::default()
    } else {
        let probs: Vec<Score> = table_spec
            .split(',')
            .map(|f| f.trim().parse::<Score>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::usage(format!("bad dm_table value {table_spec:?}: {e}")))?;
        let probs: [Score; 5] = probs
            .try_into()
            .map_err(|_| CliError::usage("dm_table needs exactly five probabilities".into()))?;
        DistortionTable::new(probs).map_err(|e| CliError::usage(e.to_string()))?
    };

    let config = Config {
        alpha,
        beta,
        beam_size,
        dm_enabled,
        fr_enabled,
        candidate_policy: CandidatePolicy {
            top_k_classifier: top_k,
            include_confusion: confusion,
            include_identity: true,
            max_set_size: max_candidates,
        },
    };
    config
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(MixtureSettings {
        config,
        temperature,
        table,
    })
}

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))
}

pub fn load_similarity(args: &ResourceArgs) -> Result<Arc<SimilarityResources>, CliError> {
    let res = load_resources(open(&args.pinyin)?, open(&args.shape)?, open(&args.fuzzy)?)
        .map_err(|e| CliError::data(e.to_string()))?;
    Ok(Arc::new(res))
}

pub fn load_lm(path: &Path) -> Result<NGramLM<Score>, CliError> {
    NGramLM::load(open(path)?)
        .map_err(|e| CliError::data(format!("cannot load model {}: {e}", path.display())))
}

/// A full decode stack: language model, classifier, channel table, and
/// similarity resources. The classifier prior comes from the model's
/// unigram counts, so no extra prior file is needed.
pub struct Stack {
    pub lm: NGramLM<Score>,
    pub classifier: NoisyChannelClassifier<Score>,
    pub resources: Arc<SimilarityResources>,
    pub table: DistortionTable<Score>,
}

pub fn build_stack(
    lm_path: &Path,
    resources: Arc<SimilarityResources>,
    settings: &MixtureSettings,
) -> Result<Stack, CliError> {
    let lm = load_lm(lm_path)?;
    let classifier = NoisyChannelClassifier::new(
        lm.unigram_counts(),
        settings.table.clone(),
        Arc::clone(&resources),
        settings.temperature,
    )
    .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(Stack {
        lm,
        classifier,
        resources,
        table: settings.table.clone(),
    })
}

/// Builds a rayon pool with the requested size (0 = rayon default).
pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::internal(format!("cannot build thread pool: {e}")))
}
