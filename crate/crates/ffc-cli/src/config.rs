//! Resolved run configuration. Precedence: command-line flag, then config
//! file entry, then built-in default. The fully resolved key→value record is
//! embedded in every output file so a run can be reproduced from its report.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FFC_OUT_DIR";

/// Flat `key=value` config file: UTF-8 lines, `#` comments, blank lines
/// ignored. Later duplicates override earlier ones.
pub fn load_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
            None => {
                return Err(CliError::usage(format!(
                    "config file {} line {}: expected key=value, got `{line}`",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(map)
}

/// Merges flag/file/default layers and records every resolved value.
pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: BTreeMap<String, String>) -> Self {
        Self {
            file,
            resolved: BTreeMap::new(),
        }
    }

    /// Resolve one typed key. `flag` wins, then the config file, then
    /// `default`. The winner is recorded under `key`.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T>
    where
        T: FromStr + Display,
    {
        let out = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw.parse::<T>().map_err(|_| {
                    CliError::usage(format!("config key `{key}`: cannot parse `{raw}`"))
                })?,
                None => default,
            },
        };
        self.resolved.insert(key.to_string(), out.to_string());
        Ok(out)
    }

    /// Resolve an optional key with no default; absent stays absent.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Display,
    {
        let out = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|_| {
                    CliError::usage(format!("config key `{key}`: cannot parse `{raw}`"))
                })?),
                None => None,
            },
        };
        if let Some(v) = &out {
            self.resolved.insert(key.to_string(), v.to_string());
        } else {
            self.resolved.insert(key.to_string(), String::new());
        }
        Ok(out)
    }

    /// Record an informational key that has no flag (derived values, seeds).
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    pub fn finish(self) -> BTreeMap<String, String> {
        self.resolved
    }
}

/// Default output directory: `FFC_OUT_DIR` if set, else the current
/// directory.
pub fn default_out_dir() -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from("."),
    }
}

/// Reject unresolvable input paths before any work starts, so a bad
/// reference exits with a usage error and no partial output.
pub fn require_readable(path: &Path, what: &str) -> CliResult<()> {
    if !path.exists() {
        return Err(CliError::usage(format!(
            "{what} path {} does not exist",
            path.display()
        )));
    }
    Ok(())
}

/// Parse a comma-separated list of typed values.
pub fn parse_list<T: FromStr>(raw: &str, what: &str) -> CliResult<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::usage(format!("{what}: cannot parse `{s}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_parsing_handles_comments_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment\n\nepochs = 12\nepochs=30\nstep=0.5").unwrap();
        let map = load_config_file(&path).unwrap();
        assert_eq!(map.get("epochs").unwrap(), "30");
        assert_eq!(map.get("step").unwrap(), "0.5");
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn malformed_line_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "epochs 30").unwrap();
        assert_eq!(load_config_file(&path).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn precedence_is_flag_then_file_then_default() {
        let mut file = BTreeMap::new();
        file.insert("epochs".to_string(), "11".to_string());
        let mut r = Resolver::new(file);
        assert_eq!(r.value("epochs", Some(5usize), 30).unwrap(), 5);
        let mut r2 = Resolver::new({
            let mut m = BTreeMap::new();
            m.insert("epochs".to_string(), "11".to_string());
            m
        });
        assert_eq!(r2.value("epochs", None::<usize>, 30).unwrap(), 11);
        let mut r3 = Resolver::new(BTreeMap::new());
        assert_eq!(r3.value("epochs", None::<usize>, 30).unwrap(), 30);
        assert_eq!(r3.finish().get("epochs").unwrap(), "30");
    }

    #[test]
    fn unparsable_file_value_is_usage() {
        let mut file = BTreeMap::new();
        file.insert("epochs".to_string(), "many".to_string());
        let mut r = Resolver::new(file);
        let err = r.value("epochs", None::<usize>, 30).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn list_parsing() {
        let got: Vec<f64> = parse_list("0.1, 1,10", "lrs").unwrap();
        assert_eq!(got, vec![0.1, 1.0, 10.0]);
        assert!(parse_list::<f64>("0.1,x", "lrs").is_err());
    }
}
