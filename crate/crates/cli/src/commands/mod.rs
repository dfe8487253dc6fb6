pub mod correct;
pub mod eval;
pub mod sweep;
pub mod synth;
pub mod train_lm;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};

use crate::CliError;

/// Opens `path` for line reading; `-` means stdin.
pub fn reader(path: &str) -> Result<Box<dyn BufRead>, CliError> {
    if path == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path).map_err(|e| CliError::data(format!("cannot open {path}: {e}")))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

/// Opens `path` for writing; `-` means stdout.
pub fn writer(path: &str) -> Result<Box<dyn Write>, CliError> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let f = File::create(path)
            .map_err(|e| CliError::internal(format!("cannot create {path}: {e}")))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

pub fn create_file(path: &std::path::Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::internal(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", path.display())))
}

/// Writes the resolved configuration as `#`-comment provenance lines.
pub fn write_provenance(w: &mut dyn Write, command: &str, echo: &[String]) -> Result<(), CliError> {
    writeln!(w, "# mixbeam {command}")
        .and_then(|_| {
            for line in echo {
                writeln!(w, "# {line}")?;
            }
            Ok(())
        })
        .map_err(|e| CliError::internal(format!("write failed: {e}")))
}

pub fn io_internal(e: io::Error) -> CliError {
    CliError::internal(format!("write failed: {e}"))
}
