//! Key-value config files: the same keys as the CLI flags, one `key = value`
//! per line, `#` comments. Flags given on the command line override file
//! values.

use std::collections::HashMap;
use std::path::Path;

/// Keys accepted in a config file (kebab-case, identical to the flags).
const ALLOWED_KEYS: &[&str] = &[
    "engine",
    "family",
    "omega-over-lambda",
    "omega0-over-lambda",
    "gamma-over-lambda",
    "alpha-sq",
    "alpha-sq-count",
    "beta-phase",
    "t-max-lambda",
    "dt-lambda",
    "sample-every",
    "n-max",
    "renormalize-trace",
    "time-axis-scale",
    "output-path",
    "threshold",
    "hold-window",
    "tolerance",
];

pub fn parse_config_file(path: &Path) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected 'key = value', got '{raw}'", lineno + 1))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !ALLOWED_KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key '{key}'", lineno + 1));
        }
        if value.is_empty() {
            return Err(format!("line {}: empty value for '{key}'", lineno + 1));
        }
        map.insert(key, value);
    }
    Ok(map)
}

/// Typed lookup with parse-error context.
pub fn get_parsed<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| format!("config key '{key}': cannot parse '{raw}': {e}")),
    }
}
