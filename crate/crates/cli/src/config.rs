//! Run configuration: a line-oriented `key = value` document with optional
//! `[model]`, `[sequence]`, `[sweep]` and `[output]` sections.
//!
//! Keys may appear before any section header or under their own section.
//! Times accept `s`, `ms`, `us`, `ns`, `ps`, `fs`; rates accept `Hz`, `kHz`,
//! `MHz`, `GHz` (numerically equal to rad/s). Lists are comma separated.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use cddsim_core::dfs::{GateName, DEFAULT_CPHASE_LENGTH};
use cddsim_core::model::{GeometryKind, MAX_QUBITS};
use cddsim_core::sequence::{Strategy, DEFAULT_TAU0};
use cddsim_core::Precision;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("override `{key}`: {message}")]
    Override { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

/// Coupling grid for sweeps; every cell runs levels `0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub j_values: Vec<f64>,
    pub beta_values: Vec<f64>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Upper bound on cells x levels.
    pub budget: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let decades: Vec<f64> = (0..=6).map(|k| 10f64.powi(k)).collect();
        SweepGrid {
            j_values: decades.clone(),
            beta_values: decades,
            workers: 0,
            budget: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub gate: GateName,
    pub strategy: Strategy,
    pub n_max: usize,
    pub tau0: f64,
    pub delta: f64,
    pub packing: bool,
    pub cphase_file: Option<PathBuf>,
    pub cphase_length: usize,
    pub seed: u64,
    pub j: f64,
    pub beta: f64,
    pub geometry: GeometryKind,
    pub bath_count: usize,
    pub blocks: usize,
    pub precision: Precision,
    pub bath_scaling: f64,
    pub sweep: SweepGrid,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Fill the wall-time column; off by default so artifacts are
    /// byte-reproducible.
    pub record_timing: bool,
}

impl RunConfig {
    /// Defaults for everything but the gate.
    pub fn new(gate: GateName) -> Self {
        RunConfig {
            gate,
            strategy: Strategy::While,
            n_max: 5,
            tau0: DEFAULT_TAU0,
            delta: 0.0,
            packing: true,
            cphase_file: None,
            cphase_length: DEFAULT_CPHASE_LENGTH,
            seed: 0,
            j: 1e4,
            beta: 1e6,
            geometry: GeometryKind::Linear,
            bath_count: 2,
            blocks: gate.blocks(),
            precision: Precision::Standard,
            bath_scaling: 1.0,
            sweep: SweepGrid::default(),
            output: None,
            format: Format::Csv,
            record_timing: false,
        }
    }

    pub fn system_count(&self) -> usize {
        self.blocks * 4
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Validation(m));
        if !(self.tau0 > 0.0) || !self.tau0.is_finite() {
            return fail(format!("tau0 must be positive, got {}", self.tau0));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return fail(format!("delta must be non-negative, got {}", self.delta));
        }
        for (name, v) in [("j", self.j), ("beta", self.beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.bath_scaling > 0.0) || !self.bath_scaling.is_finite() {
            return fail(format!(
                "bath_scaling must be positive, got {}",
                self.bath_scaling
            ));
        }
        if self.blocks != self.gate.blocks() {
            return fail(format!(
                "gate {} acts on {} block(s), not {}",
                self.gate,
                self.gate.blocks(),
                self.blocks
            ));
        }
        if self.bath_count == 0 {
            return fail("bath_count must be at least 1".into());
        }
        if self.system_count() + self.bath_count > MAX_QUBITS {
            return fail(format!(
                "total qubits {} + {} exceeds {MAX_QUBITS}",
                self.system_count(),
                self.bath_count
            ));
        }
        if self.n_max > 15 {
            return fail(format!("n_max {} is too large", self.n_max));
        }
        if self.cphase_length == 0 {
            return fail("cphase_length must be positive".into());
        }
        for (name, vs) in [
            ("j_values", &self.sweep.j_values),
            ("beta_values", &self.sweep.beta_values),
        ] {
            if vs.is_empty() || vs.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return fail(format!("{name} must be a nonempty list of positive values"));
            }
        }
        if self.sweep.budget == 0 {
            return fail("sweep budget must be positive".into());
        }
        Ok(())
    }

    /// Assigns one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "gate" => {
                self.gate = v.parse()?;
                self.blocks = self.gate.blocks();
            }
            "strategy" => self.strategy = v.parse()?,
            "n_max" => self.n_max = parse_int(v)?,
            "tau0" => self.tau0 = parse_quantity(v, TIME_UNITS)?,
            "delta" => self.delta = parse_quantity(v, TIME_UNITS)?,
            "packing" => self.packing = parse_bool(v)?,
            "cphase_file" => self.cphase_file = optional_path(v),
            "cphase_length" => self.cphase_length = parse_int(v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| format!("`{v}` is not an unsigned integer"))?
            }
            "j" => self.j = parse_quantity(v, RATE_UNITS)?,
            "beta" => self.beta = parse_quantity(v, RATE_UNITS)?,
            "geometry" => self.geometry = v.parse()?,
            "bath_count" => self.bath_count = parse_int(v)?,
            "blocks" => self.blocks = parse_int(v)?,
            "precision" => self.precision = v.parse()?,
            "bath_scaling" => self.bath_scaling = parse_quantity(v, &[])?,
            "j_values" => self.sweep.j_values = parse_list(v, RATE_UNITS)?,
            "beta_values" => self.sweep.beta_values = parse_list(v, RATE_UNITS)?,
            "workers" => self.sweep.workers = parse_int(v)?,
            "budget" => self.sweep.budget = parse_int(v)?,
            "path" => self.output = optional_path(v),
            "format" => self.format = v.parse()?,
            "record_timing" => self.record_timing = parse_bool(v)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Canonical text form; [`parse_config`] reads it back unchanged.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let list = |vs: &[f64]| {
            vs.iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let _ = writeln!(s, "[sequence]");
        let _ = writeln!(s, "gate = {}", self.gate);
        let _ = writeln!(s, "strategy = {}", self.strategy);
        let _ = writeln!(s, "n_max = {}", self.n_max);
        let _ = writeln!(s, "tau0 = {:?}", self.tau0);
        let _ = writeln!(s, "delta = {:?}", self.delta);
        let _ = writeln!(s, "packing = {}", self.packing);
        let _ = writeln!(s, "cphase_file = {}", path(&self.cphase_file));
        let _ = writeln!(s, "cphase_length = {}", self.cphase_length);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[model]");
        let _ = writeln!(s, "j = {:?}", self.j);
        let _ = writeln!(s, "beta = {:?}", self.beta);
        let _ = writeln!(s, "geometry = {}", self.geometry);
        let _ = writeln!(s, "bath_count = {}", self.bath_count);
        let _ = writeln!(s, "blocks = {}", self.blocks);
        let _ = writeln!(s, "precision = {}", self.precision);
        let _ = writeln!(s, "bath_scaling = {:?}", self.bath_scaling);
        let _ = writeln!(s, "\n[sweep]");
        let _ = writeln!(s, "j_values = {}", list(&self.sweep.j_values));
        let _ = writeln!(s, "beta_values = {}", list(&self.sweep.beta_values));
        let _ = writeln!(s, "workers = {}", self.sweep.workers);
        let _ = writeln!(s, "budget = {}", self.sweep.budget);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "path = {}", path(&self.output));
        let _ = writeln!(s, "format = {}", self.format.name());
        let _ = writeln!(s, "record_timing = {}", self.record_timing);
        s
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Sequence,
    Model,
    Sweep,
    Output,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "sequence" => Some(Section::Sequence),
            "model" => Some(Section::Model),
            "sweep" => Some(Section::Sweep),
            "output" => Some(Section::Output),
            _ => None,
        }
    }

    fn of_key(key: &str) -> Option<Self> {
        Some(match key {
            "gate" | "strategy" | "n_max" | "tau0" | "delta" | "packing" | "cphase_file"
            | "cphase_length" | "seed" => Section::Sequence,
            "j" | "beta" | "geometry" | "bath_count" | "blocks" | "precision" | "bath_scaling" => {
                Section::Model
            }
            "j_values" | "beta_values" | "workers" | "budget" => Section::Sweep,
            "path" | "format" | "record_timing" => Section::Output,
            _ => return None,
        })
    }
}

/// Parses and validates a configuration document. `gate` is required;
/// `blocks` defaults to the gate's block count.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    load_config(text, &[])
}

/// [`parse_config`] with `key = value` overrides applied after the document.
/// Override keys may carry their section as a prefix (`model.j`).
pub fn load_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::new(GateName::Memory);
    let mut gate_seen = false;
    let mut blocks_given = None;
    let mut section: Option<Section> = None;
    let mut seen: Vec<&str> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len();
        let err = |column: usize, message: String| ConfigError::Parse {
            line,
            column,
            message,
        };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| {
                    err(
                        indent + trimmed.len(),
                        "section header is missing `]`".into(),
                    )
                })?
                .trim();
            section = Some(
                Section::parse(name)
                    .ok_or_else(|| err(indent + 2, format!("unknown section `{name}`")))?,
            );
            continue;
        }
        let eq = trimmed
            .find('=')
            .ok_or_else(|| err(indent + 1, "expected `key = value`".into()))?;
        let key = trimmed[..eq].trim();
        let value = &trimmed[eq + 1..];
        let value_col = indent + eq + 2 + (value.len() - value.trim_start().len());
        let home =
            Section::of_key(key).ok_or_else(|| err(indent + 1, format!("unknown key `{key}`")))?;
        if let Some(s) = section {
            if s != home {
                return Err(err(
                    indent + 1,
                    format!("key `{key}` does not belong in this section"),
                ));
            }
        }
        if seen.contains(&key) {
            return Err(err(indent + 1, format!("duplicate key `{key}`")));
        }
        seen.push(key);
        cfg.set(key, value).map_err(|m| err(value_col, m))?;
        match key {
            "gate" => gate_seen = true,
            "blocks" => blocks_given = Some(cfg.blocks),
            _ => {}
        }
    }
    for (raw_key, value) in overrides {
        let key = match raw_key.split_once('.') {
            Some((sec, k))
                if Section::parse(sec).is_some() && Section::parse(sec) == Section::of_key(k) =>
            {
                k
            }
            _ => raw_key.as_str(),
        };
        let fail = |message: String| ConfigError::Override {
            key: raw_key.clone(),
            message,
        };
        if Section::of_key(key).is_none() {
            return Err(fail("unknown key".into()));
        }
        cfg.set(key, value).map_err(fail)?;
        match key {
            "gate" => gate_seen = true,
            "blocks" => blocks_given = Some(cfg.blocks),
            _ => {}
        }
    }
    if !gate_seen {
        return Err(ConfigError::Validation("`gate` is required".into()));
    }
    cfg.blocks = blocks_given.unwrap_or(cfg.gate.blocks());
    cfg.validate()?;
    Ok(cfg)
}

const TIME_UNITS: &[(&str, f64)] = &[
    ("fs", 1e-15),
    ("ps", 1e-12),
    ("ns", 1e-9),
    ("us", 1e-6),
    ("µs", 1e-6),
    ("ms", 1e-3),
    ("s", 1.0),
];
const RATE_UNITS: &[(&str, f64)] = &[
    ("GHz", 1e9),
    ("MHz", 1e6),
    ("kHz", 1e3),
    ("Hz", 1.0),
    ("rad/s", 1.0),
];

/// A number with an optional unit suffix from `units`.
pub fn parse_quantity(text: &str, units: &[(&str, f64)]) -> Result<f64, String> {
    let t = text.trim();
    let (number, scale) = units
        .iter()
        .find_map(|&(u, k)| t.strip_suffix(u).map(|n| (n.trim_end(), k)))
        .unwrap_or((t, 1.0));
    let v: f64 = number
        .parse()
        .map_err(|_| format!("`{t}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{t}` is not finite"));
    }
    // Exact when no unit is given, so serialised values read back bit-identically.
    Ok(if scale == 1.0 { v } else { v * scale })
}

fn parse_list(text: &str, units: &[(&str, f64)]) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|item| parse_quantity(item, units))
        .collect()
}

fn parse_int(text: &str) -> Result<usize, String> {
    text.parse()
        .map_err(|_| format!("`{text}` is not a non-negative integer"))
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn optional_path(text: &str) -> Option<PathBuf> {
    (!text.is_empty()).then(|| PathBuf::from(text))
}
