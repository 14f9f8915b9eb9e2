//! The configuration file format: line-oriented `key = value` text with a
//! documented key schema and a canonical, stable-ordered serialization.
//!
//! ```text
//! # four ends, one bridge
//! n = 1
//! J = 4
//! delta = 0.15
//! tau0 = 0.02
//! mu = 0.5
//! F = [1,0]
//! d = 0.001
//! resolution.n_around = 48
//! resolution.sphere_rows = 40
//! resolution.neck_inner = 20
//! resolution.modes = 6
//! ```
//!
//! `F` lists active bridges as `[pair,row]` entries (whitespace separated);
//! `d` lists relative branch translations left to right. Unknown keys are
//! rejected.

use std::collections::BTreeMap;

use thiserror::Error;

use super::Resolution;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: {1}")]
    Bad(usize, String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub n: i64,
    pub big_j: i64,
    pub delta: f64,
    pub tau0: f64,
    pub mu: f64,
    pub f_set: BTreeMap<i64, Vec<i64>>,
    pub d: Vec<f64>,
    pub resolution: Resolution,
    pub seed: u64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            n: 1,
            big_j: 4,
            delta: 0.15,
            tau0: 0.02,
            mu: 0.5,
            f_set: BTreeMap::new(),
            d: Vec::new(),
            resolution: Resolution::default(),
            seed: 0,
        }
    }
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile::default();
    let mut seen_n = false;
    let mut seen_j = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::Bad(lineno + 1, "expected `key = value`".into()))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: &str| ConfigError::Bad(lineno + 1, msg.to_string());
        match key {
            "n" => {
                cfg.n = value.parse().map_err(|_| bad("invalid integer for n"))?;
                seen_n = true;
            }
            "J" => {
                cfg.big_j = value.parse().map_err(|_| bad("invalid integer for J"))?;
                seen_j = true;
            }
            "delta" => cfg.delta = value.parse().map_err(|_| bad("invalid float for delta"))?,
            "tau0" => cfg.tau0 = value.parse().map_err(|_| bad("invalid float for tau0"))?,
            "mu" => cfg.mu = value.parse().map_err(|_| bad("invalid float for mu"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("invalid integer for seed"))?,
            "F" => {
                for entry in value.split_whitespace() {
                    let inner = entry
                        .strip_prefix('[')
                        .and_then(|s| s.strip_suffix(']'))
                        .ok_or_else(|| bad("F entries look like [pair,row]"))?;
                    let mut parts = inner.split(',');
                    let i: i64 = parts
                        .next()
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| bad("invalid pair index in F"))?;
                    let j: i64 = parts
                        .next()
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| bad("invalid row index in F"))?;
                    if parts.next().is_some() {
                        return Err(bad("F entries have exactly two indices"));
                    }
                    cfg.f_set.entry(i).or_default().push(j);
                }
            }
            "d" => {
                cfg.d = value
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("invalid float in d"))?;
            }
            "resolution.n_around" => {
                cfg.resolution.n_around =
                    value.parse().map_err(|_| bad("invalid resolution.n_around"))?
            }
            "resolution.sphere_rows" => {
                cfg.resolution.sphere_rows =
                    value.parse().map_err(|_| bad("invalid resolution.sphere_rows"))?
            }
            "resolution.neck_inner" => {
                cfg.resolution.neck_inner =
                    value.parse().map_err(|_| bad("invalid resolution.neck_inner"))?
            }
            "resolution.modes" => {
                cfg.resolution.modes = value.parse().map_err(|_| bad("invalid resolution.modes"))?
            }
            other => return Err(ConfigError::Bad(lineno + 1, format!("unknown key `{other}`"))),
        }
    }
    if !seen_n {
        return Err(ConfigError::Missing("n"));
    }
    if !seen_j {
        return Err(ConfigError::Missing("J"));
    }
    for rows in cfg.f_set.values_mut() {
        rows.sort_unstable();
        rows.dedup();
    }
    Ok(cfg)
}

/// Canonical serialization: fixed key order, sorted `F`, full precision.
pub fn serialize_config(cfg: &ConfigFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("n = {}\n", cfg.n));
    out.push_str(&format!("J = {}\n", cfg.big_j));
    out.push_str(&format!("delta = {:.17}\n", cfg.delta));
    out.push_str(&format!("tau0 = {:.17}\n", cfg.tau0));
    out.push_str(&format!("mu = {:.17}\n", cfg.mu));
    out.push_str(&format!("seed = {}\n", cfg.seed));
    if !cfg.f_set.is_empty() {
        let entries: Vec<String> = cfg
            .f_set
            .iter()
            .flat_map(|(&i, rows)| rows.iter().map(move |&j| format!("[{i},{j}]")))
            .collect();
        out.push_str(&format!("F = {}\n", entries.join(" ")));
    }
    if !cfg.d.is_empty() {
        let entries: Vec<String> = cfg.d.iter().map(|v| format!("{v:.17}")).collect();
        out.push_str(&format!("d = {}\n", entries.join(" ")));
    }
    out.push_str(&format!("resolution.n_around = {}\n", cfg.resolution.n_around));
    out.push_str(&format!("resolution.sphere_rows = {}\n", cfg.resolution.sphere_rows));
    out.push_str(&format!("resolution.neck_inner = {}\n", cfg.resolution.neck_inner));
    out.push_str(&format!("resolution.modes = {}\n", cfg.resolution.modes));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let text = "\
# a genus-2 configuration
n = 1
J = 4
delta = 0.15
tau0 = 0.02
mu = 0.5
F = [1,-1] [1,0] [1,1]
d = 0.001
resolution.n_around = 48
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.f_set.get(&1).unwrap(), &vec![-1, 0, 1]);
        assert_eq!(cfg.d, vec![0.001]);
        let canon = serialize_config(&cfg);
        let back = parse_config(&canon).unwrap();
        assert_eq!(back, cfg);
        // Canonical form is stable.
        assert_eq!(serialize_config(&back), canon);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(parse_config("n = 1\nJ = 2\nbogus = 3\n"), Err(ConfigError::Bad(3, _))));
    }

    #[test]
    fn missing_required_key_rejected() {
        assert!(matches!(parse_config("n = 1\n"), Err(ConfigError::Missing("J"))));
    }
}
