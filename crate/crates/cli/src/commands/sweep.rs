//! `mixbeam sweep`: evaluate the cross product of alpha / beta / beam-size
//! values. Cell failures are isolated: a failing configuration is marked in
//! the grid and the sweep continues.

use std::io::Write;

use serde_json::json;

use mixbeam::eval::evaluate;
use mixbeam::{Config, Report};

use crate::commands::eval::{decode_instances, load_eval_corpus};
use crate::commands::{create_file, io_internal, write_provenance};
use crate::config::Resolver;
use crate::pipeline::{build_stack, load_similarity, resolve_mixture, thread_pool};
use crate::{CliError, SweepArgs};

fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    let values: Vec<T> = spec
        .split(',')
        .map(|v| v.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(format!("bad {what} list {spec:?}: {e}")))?;
    if values.is_empty() {
        return Err(CliError::usage(format!("{what} list is empty")));
    }
    Ok(values)
}

pub fn run(args: SweepArgs) -> Result<(), CliError> {
    let mut resolver = Resolver::new(args.common.config.as_deref())?;
    let settings = resolve_mixture(&args.mixture, &mut resolver)?;
    let threads = resolver.value(args.common.threads, "threads", 0usize)?;
    let alphas = resolver.value(
        args.alphas.clone(),
        "alphas",
        String::from("0.1,0.3,0.5,0.7"),
    )?;
    let betas = resolver.value(args.betas.clone(), "betas", String::from("0.5,0.9,1.3"))?;
    let beams = resolver.value(
        args.beam_sizes.clone(),
        "beam_sizes",
        String::from("1,2,4,8,12"),
    )?;
    resolver.record("lm", args.lm.display());
    resolver.record("corpus", args.corpus.display());

    let alphas: Vec<f64> = parse_list(&alphas, "alpha")?;
    let betas: Vec<f64> = parse_list(&betas, "beta")?;
    let beams: Vec<usize> = parse_list(&beams, "beam size")?;

    let resources = load_similarity(&args.resources)?;
    let stack = build_stack(&args.lm, resources, &settings)?;
    let pool = thread_pool(threads)?;
    let instances = load_eval_corpus(&args.corpus)?;

    let mut grid: Vec<Config> = Vec::new();
    for &alpha in &alphas {
        for &beta in &betas {
            for &beam_size in &beams {
                grid.push(Config {
                    alpha,
                    beta,
                    beam_size,
                    ..settings.config.clone()
                });
            }
        }
    }
    grid.sort_by_key(|config| config.sort_key());

    let mut cells: Vec<(Config, Result<Report, String>)> = Vec::with_capacity(grid.len());
    for config in grid {
        let outcome = decode_instances(&instances, &stack, &config, &pool)
            .map_err(|e| e.message)
            .and_then(|triples| evaluate(&triples).map_err(|e| e.to_string()));
        cells.push((config, outcome));
    }

    let header = "alpha\tbeta\tbeam_size\tdm\tfr\tstatus\ts_p\ts_r\ts_f\tc_p\tc_r\tc_f\tfpr";
    println!("{header}");
    let mut rows = Vec::with_capacity(cells.len());
    for (config, outcome) in &cells {
        let row = match outcome {
            Ok(report) => {
                let r = report.to_record();
                format!(
                    "{}\t{}\t{}\t{}\t{}\tok\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                    config.alpha,
                    config.beta,
                    config.beam_size,
                    config.dm_enabled,
                    config.fr_enabled,
                    r.sentence_precision,
                    r.sentence_recall,
                    r.sentence_f1,
                    r.char_precision,
                    r.char_recall,
                    r.char_f1,
                    r.fpr,
                )
            }
            Err(message) => format!(
                "{}\t{}\t{}\t{}\t{}\tfailed: {}\t-\t-\t-\t-\t-\t-\t-",
                config.alpha,
                config.beta,
                config.beam_size,
                config.dm_enabled,
                config.fr_enabled,
                message.replace(['\t', '\n'], " "),
            ),
        };
        println!("{row}");
        rows.push(row);
    }

    if let Some(dir) = &args.out_dir {
        let echo = resolver.echo();
        let mut grid_file = create_file(&dir.join("grid.tsv"))?;
        write_provenance(&mut grid_file, "sweep", &echo)?;
        writeln!(grid_file, "{header}").map_err(io_internal)?;
        for row in &rows {
            writeln!(grid_file, "{row}").map_err(io_internal)?;
        }
        grid_file.flush().map_err(io_internal)?;

        let mut jsonl = create_file(&dir.join("cells.jsonl"))?;
        let meta = json!({"type": "config", "command": "sweep", "settings": echo});
        writeln!(jsonl, "{meta}").map_err(io_internal)?;
        for (config, outcome) in &cells {
            let cell = match outcome {
                Ok(report) => json!({
                    "type": "cell",
                    "alpha": config.alpha,
                    "beta": config.beta,
                    "beam_size": config.beam_size,
                    "dm": config.dm_enabled,
                    "fr": config.fr_enabled,
                    "status": "ok",
                    "report": report.to_record(),
                }),
                Err(message) => json!({
                    "type": "cell",
                    "alpha": config.alpha,
                    "beta": config.beta,
                    "beam_size": config.beam_size,
                    "dm": config.dm_enabled,
                    "fr": config.fr_enabled,
                    "status": "failed",
                    "error": message,
                }),
            };
            writeln!(jsonl, "{cell}").map_err(io_internal)?;
        }
        jsonl.flush().map_err(io_internal)?;
    }
    Ok(())
}
