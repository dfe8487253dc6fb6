//! Character n-gram language model with add-k smoothing.
//!
//! The reference generative scorer. Conditionals are
//! `p(c | ctx) = (count(ctx, c) + k) / (count(ctx) + k * |alphabet|)`;
//! contexts of every length up to `order - 1` are counted during training,
//! and queries use the longest context available in the emitted prefix.
//! The vocabulary is every alphabet character as a single-character token,
//! optionally extended with multi-character tokens whose probabilities are
//! composed from the character conditionals and renormalized over the full
//! vocabulary.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::scalar::Scalar;
use crate::scorers::{GenerativeScorer, ScorerError};
use crate::types::{TokenId, Vocabulary, UNK};

#[derive(Debug, Clone)]
pub struct NGramLM<S: Scalar> {
    order: usize,
    k: S,
    /// context -> next char -> count, for all context lengths < order.
    counts: BTreeMap<Vec<char>, BTreeMap<char, u64>>,
    /// context -> total count (derived from `counts`).
    totals: BTreeMap<Vec<char>, u64>,
    /// Sorted alphabet, always containing the reserved unknown symbol.
    alphabet: Vec<char>,
    /// Sorted multi-character vocabulary extensions.
    extra_tokens: Vec<String>,
    vocab: Vocabulary,
}

impl<S: Scalar> NGramLM<S> {
    /// Trains a model. `extra_tokens` adds multi-character vocabulary
    /// entries on top of the per-character tokens.
    pub fn train<T: AsRef<str>>(
        corpus: &[T],
        order: usize,
        k: S,
        extra_tokens: &[String],
    ) -> Result<Self, ScorerError> {
        if corpus.is_empty() {
            return Err(ScorerError::EmptyCorpus);
        }
        if order < 1 {
            return Err(ScorerError::InvalidOrder { order });
        }
        if k.is_nan() || k <= S::zero() || k.is_infinite() {
            return Err(ScorerError::InvalidSmoothing {
                k: k.to_f64().unwrap_or(f64::NAN),
            });
        }

        let mut counts: BTreeMap<Vec<char>, BTreeMap<char, u64>> = BTreeMap::new();
        let mut alphabet: Vec<char> = vec![UNK];
        for sentence in corpus {
            let chars: Vec<char> = sentence.as_ref().chars().collect();
            for (i, &c) in chars.iter().enumerate() {
                if !alphabet.contains(&c) {
                    alphabet.push(c);
                }
                for ctx_len in 0..order.min(i + 1) {
                    let context = chars[i - ctx_len..i].to_vec();
                    *counts.entry(context).or_default().entry(c).or_insert(0) += 1;
                }
            }
        }
        alphabet.sort_unstable();

        let mut extra: Vec<String> = extra_tokens
            .iter()
            .filter(|t| t.chars().count() > 1)
            .cloned()
            .collect();
        extra.sort_unstable();
        extra.dedup();

        Ok(Self::assemble(order, k, counts, alphabet, extra))
    }

    fn assemble(
        order: usize,
        k: S,
        counts: BTreeMap<Vec<char>, BTreeMap<char, u64>>,
        alphabet: Vec<char>,
        extra_tokens: Vec<String>,
    ) -> Self {
        let totals = counts
            .iter()
            .map(|(ctx, next)| (ctx.clone(), next.values().sum()))
            .collect();
        let vocab_entries: Vec<String> = alphabet
            .iter()
            .map(|c| c.to_string())
            .chain(extra_tokens.iter().cloned())
            .collect();
        let vocab = Vocabulary::new(vocab_entries);
        NGramLM {
            order,
            k,
            counts,
            totals,
            alphabet,
            extra_tokens,
            vocab,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> S {
        self.k
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    fn to_known(&self, c: char) -> char {
        if self.alphabet.binary_search(&c).is_ok() {
            c
        } else {
            UNK
        }
    }

    /// Add-k conditional `p(c | context)`. Unknown characters (in the
    /// context or the target) are mapped to the unknown symbol; the context
    /// is truncated to the last `order - 1` characters.
    pub fn conditional(&self, context: &[char], c: char) -> S {
        let start = context.len().saturating_sub(self.order - 1);
        let context: Vec<char> = context[start..].iter().map(|&x| self.to_known(x)).collect();
        let c = self.to_known(c);
        let count = self
            .counts
            .get(&context)
            .and_then(|next| next.get(&c))
            .copied()
            .unwrap_or(0);
        let total = self.totals.get(&context).copied().unwrap_or(0);
        let v = S::from_usize(self.alphabet.len()).expect("alphabet size fits scalar");
        let count = S::from_u64(count).expect("count fits scalar");
        let total = S::from_u64(total).expect("total fits scalar");
        (count + self.k) / (total + self.k * v)
    }

    /// Unigram (empty-context) character counts; the natural prior source
    /// for a noisy-channel classifier sharing this model's corpus.
    pub fn unigram_counts(&self) -> Vec<(char, u64)> {
        self.counts
            .get(&Vec::new())
            .map(|next| next.iter().map(|(&c, &n)| (c, n)).collect())
            .unwrap_or_default()
    }

    /// Log-probability of a character sequence under the chained
    /// conditionals; the per-character perplexity is `exp(-logprob / len)`.
    pub fn chars_logprob(&self, chars: &[char]) -> S {
        let mut sum = S::zero();
        for (i, &c) in chars.iter().enumerate() {
            sum = sum + self.conditional(&chars[..i], c).ln();
        }
        sum
    }

    /// Per-character perplexity over a corpus.
    pub fn perplexity<T: AsRef<str>>(&self, corpus: &[T]) -> S {
        let mut logprob = S::zero();
        let mut chars = 0usize;
        for sentence in corpus {
            let cs: Vec<char> = sentence.as_ref().chars().collect();
            chars += cs.len();
            logprob = logprob + self.chars_logprob(&cs);
        }
        if chars == 0 {
            return S::infinity();
        }
        (-logprob / S::from_usize(chars).unwrap()).exp()
    }
}

/// Beam-search state: the last `order - 1` emitted characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramState {
    context: Vec<char>,
}

impl<S: Scalar> GenerativeScorer<S> for NGramLM<S> {
    type State = NGramState;

    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn initial_state(&self) -> NGramState {
        NGramState {
            context: Vec::new(),
        }
    }

    fn step(&self, state: &NGramState, token: TokenId) -> NGramState {
        let mut context = state.context.clone();
        context.extend(self.vocab.token(token).chars.iter().copied());
        let keep = self.order - 1;
        if context.len() > keep {
            context.drain(..context.len() - keep);
        }
        NGramState { context }
    }

    fn log_distribution(&self, state: &NGramState) -> Vec<S> {
        // Raw token scores: product of character conditionals along the
        // token, then renormalized over the whole vocabulary.
        let mut raw: Vec<S> = Vec::with_capacity(self.vocab.len());
        for token in self.vocab.tokens() {
            let mut context = state.context.clone();
            let mut lp = S::zero();
            for &c in &token.chars {
                lp = lp + self.conditional(&context, c).ln();
                context.push(c);
                let keep = self.order - 1;
                if context.len() > keep {
                    context.drain(..context.len() - keep);
                }
            }
            raw.push(lp);
        }
        let log_z = log_sum_exp(&raw);
        raw.into_iter().map(|lp| lp - log_z).collect()
    }
}

/// Numerically stable log(Σ exp(x_i)).
pub fn log_sum_exp<S: Scalar>(xs: &[S]) -> S {
    let max = xs.iter().copied().fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return max;
    }
    let sum = xs.iter().fold(S::zero(), |acc, &x| acc + (x - max).exp());
    max + sum.ln()
}

// ---------------------------------------------------------------------------
// Serialization: versioned, sorted, line-based UTF-8.
//
//   mixbeam-ngram v1 TAB order=<n> TAB k=<k> TAB alphabet=<escaped chars>
//   token TAB <escaped token>            (sorted, for each extra token)
//   <escaped context> TAB <escaped char> TAB <count>   (sorted)
//
// TAB, newline, carriage return, and backslash are backslash-escaped, so the
// format stays line- and TAB-structured for arbitrary characters.
// ---------------------------------------------------------------------------

const MAGIC: &str = "mixbeam-ngram v1";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape sequence \\{other:?}")),
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub enum ModelIoError {
    Io(io::Error),
    Format { line: usize, message: String },
}

impl fmt::Display for ModelIoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelIoError::Io(e) => write!(f, "io error: {e}"),
            ModelIoError::Format { line, message } => write!(f, "model line {line}: {message}"),
        }
    }
}

impl Error for ModelIoError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            ModelIoError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for ModelIoError {
    fn from(e: io::Error) -> Self {
        ModelIoError::Io(e)
    }
}

impl<S: Scalar> NGramLM<S> {
    pub fn save<W: Write>(&self, writer: &mut W) -> io::Result<()> {
        let alphabet: String = self.alphabet.iter().collect();
        writeln!(
            writer,
            "{MAGIC}\torder={}\tk={}\talphabet={}",
            self.order,
            self.k.to_f64().expect("k is finite"),
            escape(&alphabet)
        )?;
        for token in &self.extra_tokens {
            writeln!(writer, "token\t{}", escape(token))?;
        }
        for (context, next) in &self.counts {
            let context: String = context.iter().collect();
            for (&c, &count) in next {
                writeln!(
                    writer,
                    "{}\t{}\t{}",
                    escape(&context),
                    escape(&c.to_string()),
                    count
                )?;
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self, ModelIoError> {
        let mut lines = reader.lines().enumerate();

        let (_, header) = lines.next().ok_or(ModelIoError::Format {
            line: 1,
            message: "empty model file".into(),
        })?;
        let header = header?;
        let mut fields = header.split('\t');
        if fields.next() != Some(MAGIC) {
            return Err(ModelIoError::Format {
                line: 1,
                message: format!("expected header {MAGIC:?}"),
            });
        }
        let bad = |message: String| ModelIoError::Format { line: 1, message };
        let order: usize = fields
            .next()
            .and_then(|f| f.strip_prefix("order="))
            .ok_or_else(|| bad("missing order field".into()))?
            .parse()
            .map_err(|e| bad(format!("bad order: {e}")))?;
        let k: f64 = fields
            .next()
            .and_then(|f| f.strip_prefix("k="))
            .ok_or_else(|| bad("missing k field".into()))?
            .parse()
            .map_err(|e| bad(format!("bad k: {e}")))?;
        let alphabet_field = fields
            .next()
            .and_then(|f| f.strip_prefix("alphabet="))
            .ok_or_else(|| bad("missing alphabet field".into()))?;
        let alphabet: Vec<char> = unescape(alphabet_field)
            .map_err(|message| ModelIoError::Format { line: 1, message })?
            .chars()
            .collect();
        if order < 1 {
            return Err(bad("order must be >= 1".into()));
        }
        if k.is_nan() || k <= 0.0 {
            return Err(bad("k must be > 0".into()));
        }

        let mut extra_tokens = Vec::new();
        let mut counts: BTreeMap<Vec<char>, BTreeMap<char, u64>> = BTreeMap::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line?;
            let fail = |message: String| ModelIoError::Format {
                line: lineno,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["token", tok] => {
                    extra_tokens.push(unescape(tok).map_err(fail)?);
                }
                [context, c, count] => {
                    let context: Vec<char> = unescape(context).map_err(&fail)?.chars().collect();
                    let c_str = unescape(c).map_err(&fail)?;
                    let mut cs = c_str.chars();
                    let c = match (cs.next(), cs.next()) {
                        (Some(c), None) => c,
                        _ => return Err(fail(format!("expected one character, got {c_str:?}"))),
                    };
                    let count: u64 = count.parse().map_err(|e| fail(format!("bad count: {e}")))?;
                    counts.entry(context).or_default().insert(c, count);
                }
                _ => {
                    return Err(fail(format!(
                        "expected 2 or 3 columns, found {}",
                        cols.len()
                    )))
                }
            }
        }

        Ok(Self::assemble(
            order,
            S::from_f64_lossy(k),
            counts,
            alphabet,
            extra_tokens,
        ))
    }
}
