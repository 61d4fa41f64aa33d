//! Flat `key = value` configuration. Blank lines and `#` comments are
//! ignored; later keys override earlier ones.
//!
//! Recognised keys: `input`, `assets`, `out`, `seed`, `threads`,
//! `burrows_words`, `split` (three comma-separated fractions), `model`
//! (`forest`, `boost` or `ensemble`), `trials`, `partition`,
//! `param.<name>` or `param.<family>.<name>` (fixed model parameter) and
//! `space.<name>` (tuning distribution such as `loguniform 1e-4 1e-1`).

use std::collections::BTreeMap;
use std::path::Path;

use crate::exit::{CliError, Outcome};

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

const PLAIN_KEYS: [&str; 10] = [
    "input",
    "assets",
    "out",
    "seed",
    "threads",
    "burrows_words",
    "split",
    "model",
    "trials",
    "partition",
];

impl Config {
    pub fn parse(text: &str, origin: &str) -> Outcome<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("{origin}:{}: expected `key = value`", i + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            let known = PLAIN_KEYS.contains(&k)
                || k.strip_prefix("param.").is_some_and(|s| !s.is_empty())
                || k.strip_prefix("space.").is_some_and(|s| !s.is_empty());
            if !known {
                return Err(CliError::usage(format!(
                    "{origin}:{}: unknown key `{k}`",
                    i + 1
                )));
            }
            values.insert(k.to_owned(), v.to_owned());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Outcome<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::missing(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Outcome<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::usage(format!("config key `{key}`: bad value `{v}`")))
            })
            .transpose()
    }

    /// `(name, value)` pairs under `prefix.`, in key order.
    pub fn prefixed(&self, prefix: &str) -> Vec<(String, String)> {
        let p = format!("{prefix}.");
        self.values
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&p).map(|n| (n.to_owned(), v.clone())))
            .collect()
    }
}
