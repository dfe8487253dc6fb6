//! `mixbeam eval`: decode a parallel corpus and report correction metrics.
//!
//! Records whose reference length differs from the source are reported by
//! id, skipped, and counted; the run continues. A record with no reference
//! column at all aborts with a data error.

use std::io::Write;

use rayon::prelude::*;
use serde_json::json;

use mixbeam::eval::{evaluate, evaluate_by_type, EvalTriple};
use mixbeam::types::ValidatedInstance;
use mixbeam::{corpus, Config, MixtureDecoder, Report};

use crate::commands::{create_file, io_internal, write_provenance};
use crate::config::Resolver;
use crate::pipeline::{build_stack, load_similarity, open, resolve_mixture, thread_pool, Stack};
use crate::{CliError, EvalArgs};

/// Parallel decode of a validated corpus into evaluation triples.
pub fn decode_instances(
    instances: &[ValidatedInstance],
    stack: &Stack,
    config: &Config,
    pool: &rayon::ThreadPool,
) -> Result<Vec<EvalTriple>, CliError> {
    pool.install(|| {
        instances
            .par_iter()
            .map(|v| {
                let inst = v.instance();
                let decoder = MixtureDecoder::new(
                    &inst.source,
                    &stack.lm,
                    &stack.classifier,
                    config,
                    &stack.table,
                    &stack.resources,
                )
                .map_err(|e| CliError::internal(format!("instance {}: {e}", inst.id)))?;
                let best = decoder
                    .beam_search()
                    .map_err(|e| CliError::internal(format!("instance {}: {e}", inst.id)))?
                    .swap_remove(0);
                Ok(EvalTriple {
                    source: inst.source.clone(),
                    reference: inst.reference.clone().expect("reference checked"),
                    prediction: best.0,
                })
            })
            .collect()
    })
}

/// Loads a reference corpus, skipping (and reporting) invalid records.
pub fn load_eval_corpus(path: &std::path::Path) -> Result<Vec<ValidatedInstance>, CliError> {
    let (instances, skipped) =
        corpus::read_corpus_lenient(open(path)?).map_err(|e| CliError::data(e.to_string()))?;
    for err in &skipped {
        eprintln!("mixbeam: skipping: {err}");
    }
    if !skipped.is_empty() {
        eprintln!("mixbeam: skipped {} invalid record(s)", skipped.len());
    }
    if instances.is_empty() {
        return Err(CliError::data(format!(
            "{}: no usable records",
            path.display()
        )));
    }
    for v in &instances {
        if v.instance().reference.is_none() {
            return Err(CliError::data(format!(
                "record {} has no reference column; eval needs a parallel corpus",
                v.instance().id
            )));
        }
    }
    Ok(instances)
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let mut resolver = Resolver::new(args.common.config.as_deref())?;
    let settings = resolve_mixture(&args.mixture, &mut resolver)?;
    let threads = resolver.value(args.common.threads, "threads", 0usize)?;
    resolver.record("lm", args.lm.display());
    resolver.record("corpus", args.corpus.display());

    let resources = load_similarity(&args.resources)?;
    let stack = build_stack(&args.lm, resources, &settings)?;
    let pool = thread_pool(threads)?;

    let instances = load_eval_corpus(&args.corpus)?;
    let triples = decode_instances(&instances, &stack, &settings.config, &pool)?;

    let mut report: Report = evaluate(&triples).map_err(|e| CliError::internal(e.to_string()))?;
    if args.by_type {
        let per_type = evaluate_by_type(&triples, &stack.resources)
            .map_err(|e| CliError::internal(e.to_string()))?;
        report = report.with_per_type(per_type);
    }

    println!("{report}");

    if let Some(dir) = &args.out_dir {
        let echo = resolver.echo();
        let mut txt = create_file(&dir.join("report.txt"))?;
        write_provenance(&mut txt, "eval", &echo)?;
        write!(txt, "{report}").map_err(io_internal)?;
        txt.flush().map_err(io_internal)?;

        let mut jsonl = create_file(&dir.join("report.jsonl"))?;
        let meta = json!({"type": "config", "command": "eval", "settings": echo});
        writeln!(jsonl, "{meta}").map_err(io_internal)?;
        let record = json!({"type": "report", "report": report.to_record()});
        writeln!(jsonl, "{record}").map_err(io_internal)?;
        jsonl.flush().map_err(io_internal)?;
    }
    Ok(())
}
