//! `mixbeam correct`: line-oriented correction of a text stream.
//!
//! Blank lines and `#` comments pass through untouched. Sentences are
//! decoded in parallel but emitted in input order, so output is
//! deterministic for fixed inputs and flags. The corrected stream carries
//! no provenance header (it must stay line-for-line with the input); the
//! resolved configuration goes to stderr and into the trace file.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use mixbeam::{MixtureDecoder, TraceRecord};

use crate::commands::{io_internal, reader, writer};
use crate::config::Resolver;
use crate::pipeline::{build_stack, load_similarity, resolve_mixture, thread_pool};
use crate::{CliError, CorrectArgs};

#[derive(Serialize)]
struct TraceLine<'a> {
    line: usize,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

pub fn run(args: CorrectArgs) -> Result<(), CliError> {
    let mut resolver = Resolver::new(args.common.config.as_deref())?;
    let settings = resolve_mixture(&args.mixture, &mut resolver)?;
    let threads = resolver.value(args.common.threads, "threads", 0usize)?;
    resolver.record("lm", args.lm.display());
    resolver.record("input", &args.input);

    let resources = load_similarity(&args.resources)?;
    let stack = build_stack(&args.lm, resources, &settings)?;
    let pool = thread_pool(threads)?;

    let mut input = reader(&args.input)?;
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| CliError::data(format!("cannot read input: {e}")))?;
    let lines: Vec<String> = text.lines().map(str::to_string).collect();

    let tracing = args.trace.is_some();
    let decoded: Vec<Result<(String, Vec<TraceRecord>), CliError>> = pool.install(|| {
        lines
            .par_iter()
            .enumerate()
            .map(|(lineno, line)| {
                if line.is_empty() || line.starts_with('#') {
                    return Ok((line.clone(), Vec::new()));
                }
                let source: Vec<char> = line.chars().collect();
                let decoder = MixtureDecoder::new(
                    &source,
                    &stack.lm,
                    &stack.classifier,
                    &settings.config,
                    &stack.table,
                    &stack.resources,
                )
                .map_err(|e| CliError::internal(format!("line {}: {e}", lineno + 1)))?;
                let (best, trace) = if tracing {
                    let (mut out, trace) = decoder
                        .beam_search_traced()
                        .map_err(|e| CliError::internal(format!("line {}: {e}", lineno + 1)))?;
                    (out.remove(0), trace)
                } else {
                    let mut out = decoder
                        .beam_search()
                        .map_err(|e| CliError::internal(format!("line {}: {e}", lineno + 1)))?;
                    (out.remove(0), Vec::new())
                };
                Ok((best.0.into_iter().collect::<String>(), trace))
            })
            .collect()
    });

    let mut out = writer(&args.output)?;
    let mut trace_out = match &args.trace {
        Some(path) => {
            let mut w = crate::commands::create_file(path)?;
            crate::commands::write_provenance(&mut w, "correct", &resolver.echo())?;
            Some(w)
        }
        None => None,
    };
    let mut corrected = 0usize;
    for (lineno, item) in decoded.into_iter().enumerate() {
        let (text, trace) = item?;
        if lines[lineno] != text {
            corrected += 1;
        }
        writeln!(out, "{text}").map_err(io_internal)?;
        if let Some(w) = trace_out.as_mut() {
            for record in &trace {
                let line = TraceLine {
                    line: lineno + 1,
                    record,
                };
                serde_json::to_writer(&mut *w, &line)
                    .map_err(|e| CliError::internal(format!("trace write failed: {e}")))?;
                writeln!(w).map_err(io_internal)?;
            }
        }
    }
    out.flush().map_err(io_internal)?;
    if let Some(mut w) = trace_out {
        w.flush().map_err(io_internal)?;
    }

    for line in resolver.echo() {
        eprintln!("# {line}");
    }
    eprintln!("# corrected {corrected} of {} lines", lines.len());
    Ok(())
}
