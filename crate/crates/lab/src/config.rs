//! Experiment configuration.
//!
//! A configuration is a flat list of `key=value` pairs. Pairs come from a
//! config file first and from command-line flags second; later pairs win.
//! Every output file echoes the pairs it was produced from, and such a file
//! is itself a valid config file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use doublestable_core::process::TruncationPolicy;
use doublestable_core::{Error, Result};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Table constants: qF2, theta_rho, b_n, w_n, asymptote diagnostics.
    Constants,
    /// Block exceedance rates across rho.
    Sweep,
    /// Running maximum, Poisson block counts and cluster structure.
    Macro,
    /// Common-renewal counts of the tail process.
    Tailproc,
    /// Window hit probabilities against their exact values.
    Hitprob,
    /// Anticlustering profile.
    Ac,
    /// Partial sums against the limit law.
    Sums,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Sweep => "sweep",
            Command::Macro => "macro",
            Command::Tailproc => "tailproc",
            Command::Hitprob => "hitprob",
            Command::Ac => "ac",
            Command::Sums => "sums",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: f64,
    pub beta: f64,
    pub n: u64,
    pub rho: Vec<f64>,
    pub y: Vec<f64>,
    /// Running-maximum grid of `macro`.
    pub x: Vec<f64>,
    /// Path lengths of the flatness trend of `macro`; empty means
    /// `n/100, n/10, n` (lengths below 1000 dropped).
    pub trend_n: Vec<u64>,
    pub reps: u64,
    /// Truncation override; each command has its own default.
    pub truncation: Option<TruncationPolicy>,
    pub table_horizon: usize,
    /// Tail-process horizon `L` is the smallest with `Σ_{k>L} u(k)² < residual·qF2`.
    pub residual: f64,
    pub seed: u64,
    /// Worker threads, 0 for all cores.
    pub parallelism: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub cache_dir: Option<PathBuf>,
}

pub type Pairs = Vec<(String, String)>;

pub const KEYS: [&str; 17] = [
    "command",
    "alpha",
    "beta",
    "n",
    "rho",
    "y",
    "x",
    "trend_n",
    "reps",
    "m",
    "table_horizon",
    "residual",
    "seed",
    "parallelism",
    "out",
    "format",
    "cache_dir",
];

/// Keys that cannot change any result row.
const PLUMBING: [&str; 4] = ["parallelism", "out", "format", "cache_dir"];

/// Prefix of echoed config lines in CSV output.
pub const ECHO_PREFIX: &str = "#@ ";

fn bad<T>(msg: String) -> Result<T> {
    Err(Error::Parameter(msg))
}

fn split_pair(line: &str, lineno: usize) -> Result<(String, String)> {
    match line.split_once('=') {
        Some((k, v)) => {
            let key = k.trim();
            if !KEYS.contains(&key) {
                return bad(format!("line {lineno}: unknown key '{key}'"));
            }
            Ok((key.to_string(), v.trim().to_string()))
        }
        None => bad(format!("line {lineno}: expected key=value, got '{line}'")),
    }
}

/// Pairs from a config file, a CSV output (its `#@` lines) or a json-lines
/// output (its first line).
pub fn parse_text(text: &str) -> Result<Pairs> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    if first.is_some_and(|l| l.starts_with('{')) {
        return parse_json_header(first.unwrap());
    }
    let mut pairs = Vec::new();
    let mut echoed = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix(ECHO_PREFIX.trim_end()) {
            echoed = true;
            pairs.push(split_pair(rest.trim(), i + 1)?);
        } else if line.is_empty() || line.starts_with('#') {
            continue;
        } else if echoed {
            // the data part of an output file
            break;
        } else {
            pairs.push(split_pair(line, i + 1)?);
        }
    }
    Ok(pairs)
}

fn parse_json_header(line: &str) -> Result<Pairs> {
    let v: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::Parameter(format!("bad json config header: {e}")))?;
    let Some(obj) = v.get("config").and_then(|c| c.as_object()) else {
        return bad("json header has no 'config' object".into());
    };
    let mut pairs = Vec::new();
    for key in KEYS {
        if let Some(val) = obj.get(key) {
            let s = val.as_str().map(str::to_string).unwrap_or_else(|| val.to_string());
            pairs.push((key.to_string(), s));
        }
    }
    if let Some(k) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return bad(format!("unknown key '{k}' in json header"));
    }
    Ok(pairs)
}

pub fn read_file(path: &Path) -> Result<Pairs> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parameter(format!("cannot read config {}: {e}", path.display())))?;
    parse_text(&text)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parameter(format!("{key}: cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            alpha: 0.7,
            beta: 0.3,
            n: 100_000,
            rho: vec![0.2, 0.5, 0.8],
            y: vec![1.0],
            x: vec![0.5, 1.0, 2.0, 4.0],
            trend_n: Vec::new(),
            reps: 1000,
            truncation: None,
            table_horizon: 1_000_000,
            residual: 1e-4,
            seed: 1,
            parallelism: 0,
            out: None,
            format: Format::Csv,
            cache_dir: None,
        }
    }

    /// Applies `pairs` in order over the defaults.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let Some((_, cmd)) = pairs.iter().rev().find(|(k, _)| k == "command") else {
            return bad("no command given".into());
        };
        let command = <Command as ValueEnum>::from_str(cmd, true).map_err(|_| Error::Parameter(format!("unknown command '{cmd}'")))?;
        let mut c = Self::new(command);
        for (k, v) in pairs {
            let v = v.as_str();
            match k.as_str() {
                "command" => {}
                "alpha" => c.alpha = num(k, v)?,
                "beta" => c.beta = num(k, v)?,
                "n" => c.n = num(k, v)?,
                "rho" => c.rho = list(k, v)?,
                "y" => c.y = list(k, v)?,
                "x" => c.x = list(k, v)?,
                "trend_n" => c.trend_n = list(k, v)?,
                "reps" => c.reps = num(k, v)?,
                "m" => c.truncation = if v.is_empty() { None } else { Some(v.parse()?) },
                "table_horizon" => c.table_horizon = num(k, v)?,
                "residual" => c.residual = num(k, v)?,
                "seed" => c.seed = num(k, v)?,
                "parallelism" => c.parallelism = num(k, v)?,
                "out" => c.out = (!v.is_empty()).then(|| PathBuf::from(v)),
                "format" => {
                    c.format = <Format as ValueEnum>::from_str(v, true).map_err(|_| Error::Parameter(format!("unknown format '{v}'")))?
                }
                "cache_dir" => c.cache_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
                other => return bad(format!("unknown key '{other}'")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.n < 4 {
            return bad(format!("n must be at least 4, got {}", self.n));
        }
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        if self.table_horizon < 2 {
            return bad("table horizon must be at least 2".into());
        }
        if !(self.residual > 0.0 && self.residual < 1.0) {
            return bad(format!("residual must lie in (0, 1), got {}", self.residual));
        }
        if self.y.is_empty() || self.y.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
            return bad("y grid must be nonempty and positive".into());
        }
        if self.x.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return bad("x grid must be positive".into());
        }
        if self.rho.iter().any(|r| !r.is_finite()) {
            return bad("rho values must be finite".into());
        }
        Ok(())
    }

    /// The pairs that reproduce this config, in [`KEYS`] order. The output
    /// path is left out so a replay does not overwrite its own source.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![
            ("command", self.command.name().to_string()),
            ("alpha", format!("{:?}", self.alpha)),
            ("beta", format!("{:?}", self.beta)),
            ("n", self.n.to_string()),
            ("rho", join(&self.rho)),
            ("y", join(&self.y)),
            ("x", join(&self.x)),
            ("trend_n", join(&self.trend_n)),
            ("reps", self.reps.to_string()),
        ];
        if let Some(p) = self.truncation {
            e.push(("m", p.to_string()));
        }
        e.push(("table_horizon", self.table_horizon.to_string()));
        e.push(("residual", format!("{:?}", self.residual)));
        e.push(("seed", self.seed.to_string()));
        e.push(("parallelism", self.parallelism.to_string()));
        e.push(("format", self.format.name().to_string()));
        if let Some(d) = &self.cache_dir {
            e.push(("cache_dir", d.display().to_string()));
        }
        e
    }

    /// First 16 hex digits of SHA-256 over the result-relevant echo lines.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.echo() {
            if !PLUMBING.contains(&k) {
                h.update(format!("{k}={v}\n"));
            }
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
