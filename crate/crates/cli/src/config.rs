//! Flat `key = value` settings merged from a config file and flags.

use std::collections::BTreeMap;
use std::fmt;

use hhlab_core::experiments::{Branch, Sampling};
use hhlab_core::{ExperimentConfig, ExperimentKind, ParamPoint};

/// Keys accepted in config files; each also exists as a `--flag`.
pub const KEYS: &[&str] = &[
    "n", "alpha", "p", "tol", "seed", "samples", "sampling", "branch", "radius", "t-end", "margin", "window",
    "blowup", "grid-nodes", "r-min",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Flag,
    File { line: usize },
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Flag => write!(f, "flag"),
            Source::File { line } => write!(f, "config line {line}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, (String, Source)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Name of a setting as the user wrote it, for diagnostics.
fn label(key: &str, source: &Source) -> String {
    match source {
        Source::Flag => format!("--{key}"),
        Source::File { line } => format!("'{key}' (config line {line})"),
    }
}

impl Settings {
    /// Parses config-file text. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected 'key = value', got '{line}'", i + 1))?;
            let key = normalize(k);
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key '{}'", i + 1, k.trim()));
            }
            if out.values.contains_key(&key) {
                return Err(format!("config line {}: duplicate key '{key}'", i + 1));
            }
            out.values.insert(key, (v.trim().to_string(), Source::File { line: i + 1 }));
        }
        Ok(out)
    }

    /// Sets `key` from a flag, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: &str) {
        self.values.insert(normalize(key), (value.to_string(), Source::Flag));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, src)) => {
                v.parse().map(Some).map_err(|_| format!("invalid value '{v}' for {}", label(key, src)))
            }
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, src)) => parse_list(v).map(Some).map_err(|e| format!("{} for {}", e, label(key, src))),
        }
    }

    /// Cartesian product of the `n`, `alpha` and `p` lists (`alpha` defaults to 0).
    pub fn param_points(&self) -> Result<Vec<ParamPoint>, String> {
        let ns = self.list("n")?.ok_or("missing --n")?;
        let ps = self.list("p")?.ok_or("missing --p")?;
        let alphas = self.list("alpha")?.unwrap_or_else(|| vec![0.0]);
        let mut int_ns = Vec::with_capacity(ns.len());
        for n in ns {
            if n.fract() != 0.0 || !(1.0..=1e6).contains(&n) {
                let src = &self.values["n"].1;
                return Err(format!("invalid value '{n}' for {}: expected a positive integer", label("n", src)));
            }
            int_ns.push(n as u32);
        }
        Ok(hhlab_core::experiments::param_grid(&int_ns, &alphas, &ps))
    }

    /// Builds an experiment configuration; unspecified keys keep their defaults.
    pub fn experiment(&self, kind: ExperimentKind, params: Vec<ParamPoint>, samples: usize) -> Result<ExperimentConfig, String> {
        let mut c = ExperimentConfig::new(kind, params);
        c.samples = samples;
        if let Some(x) = self.scalar("tol")? {
            c.tol = x;
        }
        if let Some(x) = self.scalar("seed")? {
            c.seed = x;
        }
        if let Some(x) = self.scalar("samples")? {
            c.samples = x;
        }
        if let Some(x) = self.scalar("radius")? {
            c.radius = x;
        }
        if let Some(x) = self.scalar("t-end")? {
            c.t_end = x;
        }
        if let Some(x) = self.scalar("margin")? {
            c.margin = x;
        }
        if let Some(x) = self.scalar("window")? {
            c.window = x;
        }
        if let Some(x) = self.scalar("blowup")? {
            c.blowup = x;
        }
        if let Some(x) = self.scalar("grid-nodes")? {
            c.grid_nodes = x;
        }
        if let Some(x) = self.scalar("r-min")? {
            c.r_min = x;
        }
        if let Some((v, src)) = self.values.get("sampling") {
            c.sampling = match v.as_str() {
                "manifold" => Sampling::Manifold,
                "box" => Sampling::Box,
                _ => return Err(format!("invalid value '{v}' for {}: expected manifold or box", label("sampling", src))),
            };
        }
        if let Some((v, src)) = self.values.get("branch") {
            c.branch = match v.as_str() {
                "both" => Branch::Both,
                "star" => Branch::Star,
                "zero" => Branch::Zero,
                _ => return Err(format!("invalid value '{v}' for {}: expected both, star or zero", label("branch", src))),
            };
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

/// Comma-separated values; an entry `start:stop:step` expands to an inclusive range.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if item.contains(':') {
            let parts: Vec<&str> = item.split(':').collect();
            let nums: Vec<f64> = parts
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| format!("invalid range '{item}'"))?;
            let [start, stop, step] = nums[..] else {
                return Err(format!("invalid range '{item}': expected start:stop:step"));
            };
            if !(step > 0.0) || stop < start {
                return Err(format!("invalid range '{item}': need step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            out.extend((0..=count).map(|k| start + step * k as f64));
        } else {
            out.push(item.parse().map_err(|_| format!("invalid value '{item}'"))?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}
