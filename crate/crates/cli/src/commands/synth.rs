//! `mixbeam synth`: corrupt a clean corpus into a parallel benchmark.
//!
//! Deterministic for a fixed seed; the achieved corruption rate is reported
//! on stderr and in the output header.

use std::io::Write;

use mixbeam::{corpus, corrupt_corpus, DistortionTable, Score};

use crate::commands::{io_internal, writer};
use crate::config::Resolver;
use crate::pipeline::{load_similarity, open};
use crate::{CliError, SynthArgs};

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let mut resolver = Resolver::new(args.common.config.as_deref())?;
    let seed = resolver.value(args.seed, "seed", 42u64)?;
    let error_rate = resolver.value(args.error_rate, "error_rate", 0.1f64)?;
    let table_spec = resolver.value(args.dm_table.clone(), "dm_table", String::from("default"))?;
    resolver.record("input", args.input.display());

    let table: DistortionTable<Score> = if table_spec == "default" {
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

    let resources = load_similarity(&args.resources)?;
    let clean = corpus::read_sentences(open(&args.input)?)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.input.display())))?;

    let (instances, stats) = corrupt_corpus(&clean, &resources, &table, seed, error_rate)
        .map_err(|e| CliError::usage(e.to_string()))?;

    let mut out = writer(&args.output)?;
    crate::commands::write_provenance(&mut out, "synth", &resolver.echo())?;
    writeln!(out, "# achieved_rate={:.6}", stats.achieved_rate()).map_err(io_internal)?;
    corpus::write_corpus(&mut out, instances.iter()).map_err(io_internal)?;
    out.flush().map_err(io_internal)?;

    eprintln!(
        "# corrupted {} of {} characters (rate {:.4}, target {:.4}, skipped {})",
        stats.chars_corrupted,
        stats.chars_total,
        stats.achieved_rate(),
        error_rate,
        stats.skipped_empty_sets,
    );
    Ok(())
}
