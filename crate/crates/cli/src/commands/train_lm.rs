//! `mixbeam train-lm`: train the character n-gram model and serialize it.

use std::io::Write;

use mixbeam::corpus::read_sentences;
use mixbeam::scorers::ngram::NGramLM;
use mixbeam::Score;

use crate::commands::{create_file, io_internal};
use crate::config::Resolver;
use crate::pipeline::open;
use crate::{CliError, TrainLmArgs};

pub fn run(args: TrainLmArgs) -> Result<(), CliError> {
    let mut resolver = Resolver::new(args.common.config.as_deref())?;
    let order = resolver.value(args.order, "order", 3usize)?;
    let k = resolver.value(args.k, "k", 0.1f64)?;
    resolver.record("input", args.input.display());

    let sentences = read_sentences(open(&args.input)?)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", args.input.display())))?;
    let extra_tokens = match &args.extra_tokens {
        Some(path) => read_sentences(open(path)?)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?,
        None => Vec::new(),
    };

    let lm: NGramLM<Score> = NGramLM::train(&sentences, order, k, &extra_tokens)
        .map_err(|e| CliError::data(e.to_string()))?;

    let mut out = create_file(&args.output)?;
    lm.save(&mut out).map_err(io_internal)?;
    out.flush().map_err(io_internal)?;

    for line in resolver.echo() {
        eprintln!("# {line}");
    }
    eprintln!(
        "# trained order-{order} model on {} sentences; alphabet {} characters; saved to {}",
        sentences.len(),
        lm.alphabet().len(),
        args.output.display(),
    );
    Ok(())
}
