use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;

/// Invalid invocation; reported with exit status 2 before any work starts.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// `key = value` settings from a config file. Keys use the long flag names;
/// `_` and `-` are interchangeable.
#[derive(Debug, Default)]
pub struct Settings {
    values: HashMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl Settings {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut values = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            values.insert(normalize(k), v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// The flag value if given, else the config value, parsed.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(&normalize(key)) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|e| usage(format!("config key {key}: {e}"))),
        }
    }
}

/// Comma-separated list, e.g. `0.1,0.2,0.3`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<T>().map_err(|e| format!("{t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

pub fn unit_interval(name: &str, x: f64) -> anyhow::Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(usage(format!("{name} must lie in [0, 1], got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_normalised_and_flags_win() {
        let s = Settings::parse("# comment\nmu_t = 0.3\nreps=4\n").unwrap();
        assert_eq!(s.pick::<f64>(None, "mu-t").unwrap(), Some(0.3));
        assert_eq!(s.pick(Some(0.5), "mu-t").unwrap(), Some(0.5));
        assert_eq!(s.pick::<usize>(None, "workers").unwrap(), None);
        assert!(s.pick::<usize>(None, "mu-t").is_err());
        assert!(Settings::parse("novalue").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!("0.1, 0.2,0.3".parse::<List<f64>>().unwrap(), List(vec![0.1, 0.2, 0.3]));
        assert!("0.1,x".parse::<List<f64>>().is_err());
    }
}
