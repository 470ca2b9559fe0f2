//! Flat `key = value` experiment files.
//!
//! Blank lines and lines starting with `#` or `;` are ignored, as is an
//! optional `[section]` header naming the subcommand. Every key must
//! belong to the subcommand's schema; duplicates are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// A rejected configuration; the CLI exits with status 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// One accepted key with its default (`None` = optional without default).
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
}

pub const fn key(name: &'static str, default: &'static str) -> Key {
    Key {
        name,
        default: Some(default),
    }
}

pub const fn optional(name: &'static str) -> Key {
    Key { name, default: None }
}

/// Resolved key-value parameters of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    /// Parses `text` against `schema`, filling in defaults.
    pub fn parse(text: &str, section: &str, schema: &[Key]) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if name.trim() != section {
                    return Err(ConfigError(format!("line {}: section [{name}] in a {section} config", n + 1)));
                }
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value, got {line:?}", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !schema.iter().any(|s| s.name == k) {
                let known: Vec<_> = schema.iter().map(|s| s.name).collect();
                return Err(ConfigError(format!("line {}: unknown key {k:?} (accepted: {})", n + 1, known.join(", "))));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key {k:?}", n + 1)));
            }
        }
        for s in schema {
            if let (false, Some(d)) = (values.contains_key(s.name), s.default) {
                values.insert(s.name.to_string(), d.to_string());
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key).ok_or_else(|| ConfigError(format!("missing key {key:?}")))?;
        raw.parse().map_err(|e| ConfigError(format!("{key} = {raw:?}: {e}")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    pub fn as_map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}
