use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment fallback for the worker count.
pub const THREADS_ENV: &str = "CONDCLT_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("`{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Alloc,
    Gnp,
    Gnm,
    Spacings,
    Transfer,
    Monotone,
    Cwold,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Alloc,
        ExperimentKind::Gnp,
        ExperimentKind::Gnm,
        ExperimentKind::Spacings,
        ExperimentKind::Transfer,
        ExperimentKind::Monotone,
        ExperimentKind::Cwold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Alloc => "alloc",
            ExperimentKind::Gnp => "gnp",
            ExperimentKind::Gnm => "gnm",
            ExperimentKind::Spacings => "spacings",
            ExperimentKind::Transfer => "transfer",
            ExperimentKind::Monotone => "monotone",
            ExperimentKind::Cwold => "cwold",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            ExperimentKind::Alloc => "Balls in boxes: counts of boxes with exactly j balls",
            ExperimentKind::Gnp => "Degree counts in G(n,p)",
            ExperimentKind::Gnm => "Degree counts in G(n,m)",
            ExperimentKind::Spacings => "Uniform spacings longer than a/n",
            ExperimentKind::Transfer => "Condition the G(n,p) and Poissonized limits and compare with the closed forms",
            ExperimentKind::Monotone => "Exact stochastic monotonicity checks on small instances",
            ExperimentKind::Cwold => "Characteristic-function scans for the one-sided Cramér-Wold counterexample",
        }
    }

    fn sampled(self) -> bool {
        matches!(self, ExperimentKind::Alloc | ExperimentKind::Gnp | ExperimentKind::Gnm | ExperimentKind::Spacings)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A configuration key with its help text and, per experiment, whether it
/// applies and its default.
pub struct KeySpec {
    pub key: &'static str,
    pub alias: Option<&'static str>,
    pub help: &'static str,
    pub applies: fn(ExperimentKind) -> Option<Option<&'static str>>,
}

use ExperimentKind::*;

/// `None`: key not accepted. `Some(None)`: accepted, no default.
/// `Some(Some(d))`: accepted with default `d`.
pub const KEYS: &[KeySpec] = &[
    KeySpec { key: "n", alias: None, help: "Number of boxes, vertices or spacings", applies: |e| e.sampled().then_some(None) },
    KeySpec {
        key: "m",
        alias: None,
        help: "Number of balls (alloc) or edges (gnm)",
        applies: |e| matches!(e, Alloc | Gnm).then_some(None),
    },
    KeySpec { key: "p", alias: None, help: "Edge probability", applies: |e| (e == Gnp).then_some(None) },
    KeySpec { key: "a", alias: None, help: "Spacing threshold a (counts spacings > a/n)", applies: |e| (e == Spacings).then_some(Some("1")) },
    KeySpec { key: "lambda", alias: None, help: "Poisson intensity", applies: |e| (e == Transfer).then_some(None) },
    KeySpec {
        key: "max-k",
        alias: Some("K"),
        help: "Largest count index k compared (statistics k = 0..=K)",
        applies: |e| match e {
            Alloc | Gnp | Gnm => Some(Some("5")),
            Transfer => Some(Some("60")),
            _ => None,
        },
    },
    KeySpec { key: "reps", alias: None, help: "Monte Carlo replicates", applies: |e| e.sampled().then_some(Some("1000")) },
    KeySpec { key: "seed", alias: None, help: "Master seed (64-bit unsigned)", applies: |_| Some(Some("0")) },
    KeySpec { key: "z-gate", alias: None, help: "Largest admissible |z| per entry", applies: |e| e.sampled().then_some(Some("4")) },
    KeySpec { key: "ks-gate", alias: None, help: "Largest admissible normality distance", applies: |e| e.sampled().then_some(Some("0.05")) },
    KeySpec {
        key: "ks-coords",
        alias: None,
        help: "Comma-separated coordinates given a normality check (empty for none)",
        applies: |e| e.sampled().then_some(Some("0")),
    },
    KeySpec {
        key: "workers",
        alias: None,
        help: "Worker threads (falls back to CONDCLT_THREADS, then all cores); never changes results",
        applies: |e| e.sampled().then_some(None),
    },
    KeySpec {
        key: "dump",
        alias: None,
        help: "Write raw per-replicate counts here as little-endian u64 rows",
        applies: |e| e.sampled().then_some(None),
    },
    KeySpec { key: "tol", alias: None, help: "Tolerance on the analytic identities", applies: |e| (e == Transfer).then_some(Some("1e-10")) },
    KeySpec { key: "n-max", alias: None, help: "Largest number of boxes enumerated", applies: |e| (e == Monotone).then_some(Some("5")) },
    KeySpec { key: "m-max", alias: None, help: "Largest number of balls enumerated", applies: |e| (e == Monotone).then_some(Some("8")) },
    KeySpec { key: "graph-n", alias: None, help: "Vertices of the enumerated graphs (at most 7)", applies: |e| (e == Monotone).then_some(Some("4")) },
    KeySpec { key: "grid", alias: None, help: "Grid step of the scans", applies: |e| (e == Cwold).then_some(Some("0.015")) },
    KeySpec { key: "T", alias: None, help: "Scan half-width: [0,T]^2 and [-T,T]^2", applies: |e| (e == Cwold).then_some(Some("3")) },
    KeySpec { key: "scan-out", alias: None, help: "Write the full scan table (CSV) here", applies: |e| (e == Cwold).then_some(None) },
    KeySpec { key: "out", alias: None, help: "Report path (stdout when absent)", applies: |_| Some(None) },
    KeySpec { key: "format", alias: None, help: "Report format: structured (JSON) or table (CSV)", applies: |_| Some(Some("structured")) },
];

/// Canonical name of a key as written on the command line or in a file.
pub fn canonical_key(raw: &str) -> Option<&'static str> {
    let dashed = raw.trim().replace('_', "-");
    KEYS.iter().find(|k| k.key == dashed || k.alias == Some(dashed.as_str())).map(|k| k.key)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, format!("line {} is not of the form key=value", lineno + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Structured,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: Option<u64>,
    pub m: Option<u64>,
    pub p: Option<f64>,
    pub a: Option<f64>,
    pub lambda: Option<f64>,
    pub max_k: Option<usize>,
    pub reps: Option<u64>,
    pub seed: u64,
    pub z_gate: f64,
    pub ks_gate: f64,
    pub ks_coords: Vec<usize>,
    pub workers: Option<usize>,
    pub dump: Option<PathBuf>,
    pub tol: f64,
    pub n_max: usize,
    pub m_max: usize,
    pub graph_n: usize,
    pub grid: f64,
    pub t_extent: f64,
    pub scan_out: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::new(key, format!("cannot parse {v:?}: {e}")))
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(ConfigError::new(key, format!("must be positive, got {x}")))
    }
}

fn at_least<T: PartialOrd + fmt::Display>(key: &str, x: T, min: T) -> Result<T, ConfigError> {
    if x >= min {
        Ok(x)
    } else {
        Err(ConfigError::new(key, format!("must be at least {min}, got {x}")))
    }
}

/// Resolves file values, flag values (which win) and defaults into a
/// validated config. `env_threads` is the value of `CONDCLT_THREADS`.
pub fn parse_config(
    experiment: ExperimentKind,
    file_values: &[(String, String)],
    flag_values: &[(String, String)],
    env_threads: Option<String>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
    for (raw, v) in file_values.iter().chain(flag_values) {
        if raw == "experiment" {
            if v != experiment.name() {
                return Err(ConfigError::new("experiment", format!("file is for {v:?}, command is {experiment}")));
            }
            continue;
        }
        let key = canonical_key(raw).ok_or_else(|| ConfigError::new(raw, "unknown key"))?;
        let spec = KEYS.iter().find(|k| k.key == key).unwrap();
        if (spec.applies)(experiment).is_none() {
            return Err(ConfigError::new(raw, format!("not a parameter of {experiment}")));
        }
        values.insert(key, v.clone());
    }
    for spec in KEYS {
        if let Some(Some(default)) = (spec.applies)(experiment) {
            values.entry(spec.key).or_insert_with(|| default.to_string());
        }
    }
    if !values.contains_key("workers") {
        if let Some(t) = env_threads.filter(|t| !t.trim().is_empty()) {
            let w: usize = parse(THREADS_ENV, t.trim())?;
            values.insert("workers", at_least(THREADS_ENV, w, 1)?.to_string());
        }
    }
    let get = |k: &str| values.get(k).map(String::as_str);
    let require = |k: &str| get(k).ok_or_else(|| ConfigError::new(k, format!("required by {experiment}")));
    let opt_u64 = |k: &str| get(k).map(|v| parse::<u64>(k, v)).transpose();
    let opt_f64 = |k: &str| get(k).map(|v| parse::<f64>(k, v)).transpose();
    let f64_or = |k: &str, d: f64| Ok::<f64, ConfigError>(opt_f64(k)?.unwrap_or(d));
    let usize_or = |k: &str, d: usize| get(k).map(|v| parse::<usize>(k, v)).transpose().map(|x| x.unwrap_or(d));

    let mut cfg = ExperimentConfig {
        experiment,
        n: opt_u64("n")?,
        m: opt_u64("m")?,
        p: opt_f64("p")?,
        a: opt_f64("a")?,
        lambda: opt_f64("lambda")?,
        max_k: get("max-k").map(|v| parse::<usize>("max-k", v)).transpose()?,
        reps: opt_u64("reps")?,
        seed: get("seed").map(|v| parse::<u64>("seed", v)).transpose()?.unwrap_or(0),
        z_gate: f64_or("z-gate", 4.0)?,
        ks_gate: f64_or("ks-gate", 0.05)?,
        ks_coords: match get("ks-coords") {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse::<usize>("ks-coords", s))
                .collect::<Result<_, _>>()?,
            None => Vec::new(),
        },
        workers: get("workers").map(|v| parse::<usize>("workers", v)).transpose()?,
        dump: get("dump").map(PathBuf::from),
        tol: f64_or("tol", 1e-10)?,
        n_max: usize_or("n-max", 5)?,
        m_max: usize_or("m-max", 8)?,
        graph_n: usize_or("graph-n", 4)?,
        grid: f64_or("grid", 0.015)?,
        t_extent: f64_or("T", 3.0)?,
        scan_out: get("scan-out").map(PathBuf::from),
        out: get("out").map(PathBuf::from),
        format: match get("format").unwrap_or("structured") {
            "structured" | "json" => OutputFormat::Structured,
            "table" | "csv" => OutputFormat::Table,
            other => return Err(ConfigError::new("format", format!("expected structured or table, got {other:?}"))),
        },
    };

    if experiment.sampled() {
        let n = at_least("n", parse::<u64>("n", require("n")?)?, 1)?;
        let reps = at_least("reps", cfg.reps.unwrap_or(1000), 100)?;
        cfg.reps = Some(reps);
        match experiment {
            Alloc => {
                at_least("m", parse::<u64>("m", require("m")?)?, 1)?;
            }
            Gnm => {
                at_least("n", n, 2)?;
                let m = at_least("m", parse::<u64>("m", require("m")?)?, 1)?;
                let pairs = n * (n - 1) / 2;
                if m > pairs {
                    return Err(ConfigError::new("m", format!("{m} exceeds the {pairs} vertex pairs")));
                }
            }
            Gnp => {
                at_least("n", n, 2)?;
                let p = parse::<f64>("p", require("p")?)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(ConfigError::new("p", format!("must lie in (0, 1), got {p}")));
                }
            }
            Spacings => {
                positive("a", cfg.a.unwrap_or(1.0))?;
            }
            _ => {}
        }
        if let Some(k) = cfg.max_k {
            if k > 200 {
                return Err(ConfigError::new("max-k", format!("at most 200, got {k}")));
            }
        }
        let dim = if experiment == Spacings { 1 } else { cfg.max_k.unwrap_or(5) + 1 };
        if let Some(c) = cfg.ks_coords.iter().find(|c| **c >= dim) {
            return Err(ConfigError::new("ks-coords", format!("coordinate {c} outside 0..{dim}")));
        }
        positive("z-gate", cfg.z_gate)?;
        positive("ks-gate", cfg.ks_gate)?;
        if let Some(w) = cfg.workers {
            at_least("workers", w, 1)?;
        }
    }
    match experiment {
        Transfer => {
            positive("lambda", parse::<f64>("lambda", require("lambda")?)?)?;
            positive("tol", cfg.tol)?;
        }
        Monotone => {
            if !(1..=8).contains(&cfg.n_max) {
                return Err(ConfigError::new("n-max", format!("must lie in 1..=8, got {}", cfg.n_max)));
            }
            if cfg.m_max > 12 {
                return Err(ConfigError::new("m-max", format!("at most 12, got {}", cfg.m_max)));
            }
            if !(1..=7).contains(&cfg.graph_n) {
                return Err(ConfigError::new("graph-n", format!("must lie in 1..=7, got {}", cfg.graph_n)));
            }
        }
        Cwold => {
            positive("grid", cfg.grid)?;
            positive("T", cfg.t_extent)?;
            if cfg.t_extent / cfg.grid > 2000.0 {
                return Err(ConfigError::new("grid", "more than 2000 steps per half-axis"));
            }
        }
        _ => {}
    }
    Ok(cfg)
}
