//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, later assignments win.
//! Keys are the [`RunConfig`] fields plus a few per-command extras listed in
//! [`EXTRA_KEYS`]; anything else is rejected.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::ensemble::RunConfig;
use crate::error::{Error, Result};
use crate::lattice::RasterPolicy;

/// Run keys with a one-line description.
pub const RUN_KEYS: &[(&str, &str)] = &[
    ("d", "dimension"),
    ("n", "cells per axis"),
    ("L", "box side (with n: sets h = L/n)"),
    ("h", "lattice spacing"),
    ("T", "screening parameter"),
    ("rho", "minimum separation (default sqrt(d)+1)"),
    ("lambda", "hardcore Poisson time horizon"),
    ("parking", "use random parking instead of hardcore Poisson"),
    ("gbar", "inclusion flux"),
    ("realizations", "number of independent realizations"),
    ("master_seed", "seed of every random stream (alias: seed)"),
    ("cg_tol", "relative residual tolerance"),
    ("cg_maxit", "iteration cap (default 50 n)"),
    ("box_rule", "minimum L / sqrt(T) for scaling claims"),
    ("mode", "nonlinear | linearized | green | divform"),
    ("scaling_claim", "enforce the box rule"),
    ("jacobi", "diagonal preconditioning"),
    ("raster", "strict | relaxed"),
    ("direction", "axis of the divergence-form source"),
    ("threads", "worker threads"),
    ("memory_budget_mb", "abort before solving above this estimate"),
    ("green_r_min", "inner radius of the Green decay fit"),
    ("green_r_max", "outer radius of the Green decay fit"),
    ("shell_width", "shell width of the Green decay fit"),
];

/// Per-command keys that are not part of a run.
pub const EXTRA_KEYS: &[(&str, &str)] = &[
    ("t_list", "comma-separated increasing T values for sweep"),
    ("fit", "power | logarithmic"),
    ("check", "radial | dense"),
    ("r_out", "outer radius of the radial oracle"),
    ("nodes", "radial oracle node count"),
    ("g1", "radial oracle inclusion flux"),
    ("g2", "radial oracle bulk source"),
    ("flux", "total | average flux normalization"),
    ("dump_field", "write the solution as a binary field dump"),
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Settings {
    pub run: RunConfig,
    pub extra: BTreeMap<String, String>,
}

impl Settings {
    pub fn extra<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.extra
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("cannot parse {key} = '{v}'"))))
            .transpose()
    }
}

fn canonical(key: &str) -> &str {
    match key {
        "seed" => "master_seed",
        other => other,
    }
}

pub fn is_known_key(key: &str) -> bool {
    let key = canonical(key);
    RUN_KEYS.iter().chain(EXTRA_KEYS).any(|(k, _)| *k == key)
}

/// Parses a configuration file into ordered assignments.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key} expects true or false, got '{value}'"))),
    }
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" || value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical(key);
        let c = &mut self.run;
        match key {
            "d" => c.d = parse(key, value)?,
            "n" => c.n = optional(key, value)?,
            "L" => c.l = optional(key, value)?,
            "h" => c.h = parse(key, value)?,
            "T" => c.t = parse(key, value)?,
            "rho" => c.rho = optional(key, value)?,
            "lambda" => c.lambda = parse(key, value)?,
            "parking" => c.parking = parse_bool(key, value)?,
            "gbar" => c.gbar = parse(key, value)?,
            "realizations" => c.realizations = parse(key, value)?,
            "master_seed" => c.master_seed = parse(key, value)?,
            "cg_tol" => c.cg_tol = parse(key, value)?,
            "cg_maxit" => c.cg_maxit = optional(key, value)?,
            "box_rule" => c.box_rule = parse(key, value)?,
            "mode" => c.mode = value.parse()?,
            "scaling_claim" => c.scaling_claim = parse_bool(key, value)?,
            "jacobi" => c.jacobi = parse_bool(key, value)?,
            "raster" => {
                c.raster = match value {
                    "strict" => RasterPolicy::Strict,
                    "relaxed" => RasterPolicy::Relaxed,
                    _ => return Err(Error::Config(format!("raster expects strict or relaxed, got '{value}'"))),
                }
            }
            "direction" => c.direction = parse(key, value)?,
            "threads" => c.threads = optional(key, value)?,
            "memory_budget_mb" => c.memory_budget_mb = parse(key, value)?,
            "green_r_min" => c.green_r_min = parse(key, value)?,
            "green_r_max" => c.green_r_max = parse(key, value)?,
            "shell_width" => c.shell_width = parse(key, value)?,
            _ if EXTRA_KEYS.iter().any(|(k, _)| *k == key) => {
                self.extra.insert(key.to_string(), value.to_string());
            }
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Echo of every run key, in registry order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let json = serde_json::to_value(&self.run).expect("run config serializes");
        let mut out: Vec<(String, String)> = RUN_KEYS
            .iter()
            .map(|(k, _)| {
                let v = match &json[*k] {
                    serde_json::Value::Null => "auto".to_string(),
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.to_string(), v)
            })
            .collect();
        out.extend(self.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|s| parse(key, s.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Mode;

    #[test]
    fn parses_comments_and_overrides() {
        let text = "# zero run\nd = 3\nn=32 # cells\nT = 100\nlambda = 0\nseed = 9\nmode = linearized\n\nd = 2\n";
        let mut s = Settings::default();
        let pairs = parse_config(text).unwrap();
        s.apply_all(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(s.run.d, 2);
        assert_eq!(s.run.n, Some(32));
        assert_eq!(s.run.t, 100.0);
        assert_eq!(s.run.lambda, 0.0);
        assert_eq!(s.run.master_seed, 9);
        assert_eq!(s.run.mode, Mode::Linearized);
    }

    #[test]
    fn unknown_and_malformed_rejected() {
        let mut s = Settings::default();
        assert!(matches!(s.set("colour", "red"), Err(Error::Config(_))));
        assert!(matches!(s.set("d", "three"), Err(Error::Config(_))));
        assert!(matches!(s.set("raster", "loose"), Err(Error::Config(_))));
        assert!(parse_config("just words").is_err());
    }

    #[test]
    fn extras_and_echo() {
        let mut s = Settings::default();
        s.set("t_list", "16, 64,256").unwrap();
        assert_eq!(parse_list("t_list", &s.extra["t_list"]).unwrap(), vec![16.0, 64.0, 256.0]);
        let echo = s.to_pairs();
        assert_eq!(echo[0], ("d".to_string(), "3".to_string()));
        assert!(echo.iter().any(|(k, v)| k == "n" && v == "auto"));
        assert!(echo.iter().any(|(k, v)| k == "raster" && v == "strict"));
        assert!(echo.iter().any(|(k, _)| k == "t_list"));
        for (k, v) in &echo {
            let mut fresh = Settings::default();
            fresh.set(k, v).unwrap();
        }
    }
}
