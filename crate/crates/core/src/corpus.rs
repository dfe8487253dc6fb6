//! Parallel corpus IO.
//!
//! One record per line, TAB-separated: `id TAB source [TAB reference]`.
//! Lines beginning with `#` are comments; blank lines are skipped.

use std::error::Error;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::types::{validate_instance, CorrectionInstance, InstanceError, ValidatedInstance};

#[derive(Debug)]
pub enum CorpusError {
    Io(io::Error),
    /// Line did not have 2 or 3 TAB-separated columns.
    BadRecord {
        line: usize,
        columns: usize,
    },
    Invalid {
        line: usize,
        id: String,
        cause: InstanceError,
    },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::Io(e) => write!(f, "io error: {e}"),
            CorpusError::BadRecord { line, columns } => {
                write!(
                    f,
                    "line {line}: expected 2 or 3 TAB-separated columns, found {columns}"
                )
            }
            CorpusError::Invalid { line, id, cause } => {
                write!(f, "line {line} (id {id}): {cause}")
            }
        }
    }
}

impl Error for CorpusError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            CorpusError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for CorpusError {
    fn from(e: io::Error) -> Self {
        CorpusError::Io(e)
    }
}

/// Reads a parallel corpus, validating every record.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<ValidatedInstance>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        let inst = match cols.as_slice() {
            [id, source] => CorrectionInstance::new(*id, source, None),
            [id, source, reference] => CorrectionInstance::new(*id, source, Some(reference)),
            _ => {
                return Err(CorpusError::BadRecord {
                    line: lineno,
                    columns: cols.len(),
                })
            }
        };
        let id = inst.id.clone();
        match validate_instance(inst) {
            Ok(v) => out.push(v),
            Err(cause) => {
                return Err(CorpusError::Invalid {
                    line: lineno,
                    id,
                    cause,
                })
            }
        }
    }
    Ok(out)
}

/// Like [`read_corpus`], but collects invalid records instead of failing,
/// so a run can continue past them. Structural errors (bad column counts)
/// still abort.
pub fn read_corpus_lenient<R: BufRead>(
    reader: R,
) -> Result<(Vec<ValidatedInstance>, Vec<CorpusError>), CorpusError> {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        let inst = match cols.as_slice() {
            [id, source] => CorrectionInstance::new(*id, source, None),
            [id, source, reference] => CorrectionInstance::new(*id, source, Some(reference)),
            _ => {
                return Err(CorpusError::BadRecord {
                    line: lineno,
                    columns: cols.len(),
                })
            }
        };
        let id = inst.id.clone();
        match validate_instance(inst) {
            Ok(v) => out.push(v),
            Err(cause) => skipped.push(CorpusError::Invalid {
                line: lineno,
                id,
                cause,
            }),
        }
    }
    Ok((out, skipped))
}

/// Writes records in the same TAB-separated format.
pub fn write_corpus<'a, W: Write>(
    writer: &mut W,
    instances: impl IntoIterator<Item = &'a CorrectionInstance>,
) -> io::Result<()> {
    for inst in instances {
        let source: String = inst.source.iter().collect();
        match &inst.reference {
            Some(reference) => {
                let reference: String = reference.iter().collect();
                writeln!(writer, "{}\t{}\t{}", inst.id, source, reference)?;
            }
            None => writeln!(writer, "{}\t{}", inst.id, source)?,
        }
    }
    Ok(())
}

/// Reads a plain text corpus: one sentence per line, `#` comments and blank
/// lines skipped.
pub fn read_sentences<R: BufRead>(reader: R) -> io::Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\n', '\r']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(trimmed.to_string());
    }
    Ok(out)
}
