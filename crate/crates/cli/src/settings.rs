//! Option lookup: command-line flags first, then the `key=value` config file.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Keys accepted in a config file. Dashes and underscores are interchangeable.
pub const KEYS: &[&str] = &[
    "mu",
    "c",
    "k",
    "objects",
    "dims",
    "seed",
    "workers",
    "node_budget",
    "format",
    "out",
    "max_gap",
    "rows",
    "cols",
    "frames",
    "side",
    "velocity",
    "drift",
    "width",
    "background",
    "noise_db",
    "m",
    "n",
    "ks",
    "ns",
    "trials",
    "min_time_ms",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: HashMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {}: expected key=value", i + 1))
            })?;
            let key = normalize(key);
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "config line {}: unknown key {key:?}",
                    i + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    /// The flag if given, else the parsed config entry.
    pub fn pick<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        debug_assert!(KEYS.contains(&key), "unregistered key {key}");
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config value for {key}: {e}"))),
        }
    }

    pub fn pick_or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(key, flag)?.unwrap_or(default))
    }
}

/// Comma-separated values, e.g. `1,1000`.
pub fn parse_list<T>(s: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|e| CliError::usage(format!("bad list entry {t:?}: {e}")))
        })
        .collect()
}

/// Inclusive ranges `3..9` or `3..=9`, or a comma-separated list.
pub fn parse_range(s: &str) -> Result<Vec<usize>, CliError> {
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let bad = |t: &str| CliError::usage(format!("bad range bound {t:?}"));
        let lo: usize = a.trim().parse().map_err(|_| bad(a))?;
        let hi: usize = b.trim().parse().map_err(|_| bad(b))?;
        if lo > hi {
            return Err(CliError::usage(format!("empty range {s}")));
        }
        return Ok((lo..=hi).collect());
    }
    let v = parse_list(s)?;
    if v.is_empty() {
        return Err(CliError::usage("empty list"));
    }
    Ok(v)
}
