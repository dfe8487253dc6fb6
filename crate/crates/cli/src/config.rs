//! Run-configuration resolution with the precedence
//! flags > environment > config file > defaults.
//!
//! The config file is flat `key=value` UTF-8 (`#` comments allowed);
//! environment variables use the `MIXBEAM_` prefix with the key uppercased
//! (`alpha` -> `MIXBEAM_ALPHA`). Every resolved value is recorded so
//! commands can echo the full configuration into their output artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const ENV_PREFIX: &str = "MIXBEAM_";

#[derive(Debug)]
pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config_path: Option<&Path>) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        if let Some(path) = config_path {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::data(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::usage(format!(
                        "config file {} line {}: expected key=value",
                        path.display(),
                        idx + 1
                    ))
                })?;
                file.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Resolver {
            file,
            resolved: BTreeMap::new(),
        })
    }

    fn lookup(&self, key: &str) -> Option<String> {
        let env_key = format!("{ENV_PREFIX}{}", key.to_uppercase());
        if let Ok(v) = std::env::var(&env_key) {
            return Some(v);
        }
        self.file.get(key).cloned()
    }

    /// Resolves one value and records the outcome for provenance.
    pub fn value<T>(&mut self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.lookup(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|e| CliError::usage(format!("bad value {raw:?} for {key}: {e}")))?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Boolean with flag semantics: a `--no-x` style switch forces false.
    pub fn flag_bool(
        &mut self,
        disable_flag: bool,
        key: &str,
        default: bool,
    ) -> Result<bool, CliError> {
        let flag = if disable_flag { Some(false) } else { None };
        self.value(flag, key, default)
    }

    /// Records a non-tunable setting (paths, seeds given positionally) so it
    /// still shows up in provenance.
    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// The resolved configuration as sorted `key=value` lines.
    pub fn echo(&self) -> Vec<String> {
        self.resolved
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn precedence_flag_over_env_over_file_over_default() {
        let dir = std::env::temp_dir().join("mixbeam-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment\nalpha = 0.3\nbeam_size=7").unwrap();

        let mut r = Resolver::new(Some(&path)).unwrap();
        // file beats default
        assert_eq!(r.value(None::<f64>, "alpha", 0.5).unwrap(), 0.3);
        // flag beats file
        assert_eq!(r.value(Some(0.9f64), "alpha", 0.5).unwrap(), 0.9);
        // default when absent everywhere
        assert_eq!(r.value(None::<usize>, "top_k", 8).unwrap(), 8);
        // env beats file (set a key unlikely to collide with other tests)
        std::env::set_var("MIXBEAM_BEAM_SIZE", "3");
        assert_eq!(r.value(None::<usize>, "beam_size", 12).unwrap(), 3);
        std::env::remove_var("MIXBEAM_BEAM_SIZE");

        let echo = r.echo();
        assert!(echo.iter().any(|l| l == "beam_size=3"));
        assert!(echo.iter().any(|l| l == "alpha=0.9"));
    }

    #[test]
    fn bad_config_line_is_usage_error() {
        let dir = std::env::temp_dir().join("mixbeam-config-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.conf");
        std::fs::write(&path, "nonsense line\n").unwrap();
        let err = Resolver::new(Some(&path)).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
