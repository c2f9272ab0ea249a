//! Plain `key = value` configuration files.
//!
//! Keys mirror the long command-line flags (`alpha`, `beta`, `tm`, `t`,
//! `model`, `reply`, `seed`, `trials`, `out`) plus a few campaign-only keys.
//! Blank lines and lines starting with `#` are ignored. A flag given on the
//! command line always wins over the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "beta",
    "tm",
    "t",
    "model",
    "reply",
    "seed",
    "trials",
    "out",
    "schemes",
    "rounds",
    "include_probe_cost",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
}

/// Parsed key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line: i + 1, key });
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { line: i + 1, key });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Flag values layered over an optional file.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    file: ConfigFile,
    flags: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(file: ConfigFile) -> Self {
        Self {
            file,
            flags: BTreeMap::new(),
        }
    }

    /// Records a command-line value; `None` leaves the file value in place.
    pub fn flag(mut self, key: &str, value: Option<impl ToString>) -> Self {
        if let Some(v) = value {
            self.flags.insert(key.to_string(), v.to_string());
        }
        self
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.flags.get(key).map(String::as_str).or_else(|| self.file.get(key))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|s| {
                s.parse::<T>().map_err(|e| ConfigError::Value {
                    key: key.to_string(),
                    message: format!("`{s}`: {e}"),
                })
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::Value {
            key: key.to_string(),
            message: "missing (pass the flag or set it in the config file)".into(),
        })
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(s) = self.raw(key) else { return Ok(None) };
        s.split(',')
            .map(str::trim)
            .filter(|x| !x.is_empty())
            .map(|x| {
                x.parse::<T>().map_err(|e| ConfigError::Value {
                    key: key.to_string(),
                    message: format!("`{x}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let c = ConfigFile::parse("# grid\nalpha = 0.9\n\n  beta=0.1  \nt = 100, 1000\n").unwrap();
        assert_eq!(c.get("alpha"), Some("0.9"));
        assert_eq!(c.get("beta"), Some("0.1"));
        assert_eq!(c.get("t"), Some("100, 1000"));
        assert_eq!(c.get("seed"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(ConfigFile::parse("alpha 0.9"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ConfigFile::parse("gamma = 1"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(ConfigFile::parse("seed = 1\nseed = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("alpha = 0.9\nbeta = 0.1").unwrap();
        let s = Settings::new(file).flag("alpha", Some(0.95)).flag("beta", None::<f64>);
        assert_eq!(s.require::<f64>("alpha").unwrap(), 0.95);
        assert_eq!(s.require::<f64>("beta").unwrap(), 0.1);
        assert!(s.require::<u64>("trials").is_err());
        assert_eq!(s.get_or("trials", 7u64).unwrap(), 7);
    }

    #[test]
    fn lists_split_on_commas() {
        let s = Settings::new(ConfigFile::parse("t = 10, 20,30").unwrap());
        assert_eq!(s.list::<u64>("t").unwrap(), Some(vec![10, 20, 30]));
        let bad = Settings::new(ConfigFile::parse("t = 10, x").unwrap());
        assert!(bad.list::<u64>("t").is_err());
    }
}
