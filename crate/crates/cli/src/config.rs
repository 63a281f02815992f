//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [problem]
//! kind = projection          # projection | quadratic-erm | logistic-erm (required)
//! dimension = 20             # default 20 for projection, 50 for synthetic ERM data
//! radius = 1.0               # projection ball radius
//! ratio = 1.1                # distance of the unconstrained optimum, in radii
//! samples = 500              # synthetic ERM sample count
//! dataset = data.csv         # ERM features + label per row (overrides synthesis)
//! has_header = false
//!
//! [map]
//! condition_numbers = identity, 1e6
//! seed = 11                  # default: global seed + 1
//!
//! [run]
//! strategies = affine-backtracking, backtracking, fixed   (required)
//! max_iters = 1000
//! gap_tol = 1e-10
//! initial_constant = 1
//! directional_constant = 4   # needed by `directional`
//! modified_constant = 4      # needed by `modified`
//! seed = 7
//!
//! [output]
//! dir = out
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fwaffine::stepsize::StrategyKind;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Projection,
    QuadraticErm,
    LogisticErm,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Projection => "projection",
            ProblemKind::QuadraticErm => "quadratic-erm",
            ProblemKind::LogisticErm => "logistic-erm",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "projection" => Ok(ProblemKind::Projection),
            "quadratic-erm" => Ok(ProblemKind::QuadraticErm),
            "logistic-erm" => Ok(ProblemKind::LogisticErm),
            other => Err(format!("unknown problem kind '{other}' (projection, quadratic-erm, logistic-erm)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapSpec {
    Identity,
    Random { condition_number: f64 },
}

impl MapSpec {
    pub fn name(&self) -> String {
        match self {
            MapSpec::Identity => "identity".into(),
            MapSpec::Random { condition_number } => format!("cond{condition_number:e}"),
        }
    }
}

impl FromStr for MapSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "identity" {
            return Ok(MapSpec::Identity);
        }
        let c: f64 = s.parse().map_err(|_| format!("condition number '{s}' is neither 'identity' nor a number"))?;
        if !(c >= 1.0 && c.is_finite()) {
            return Err(format!("condition number must be at least 1, got {s}"));
        }
        Ok(MapSpec::Random { condition_number: c })
    }
}

impl std::fmt::Display for MapSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MapSpec::Identity => f.write_str("identity"),
            MapSpec::Random { condition_number } => write!(f, "{condition_number}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ProblemKind,
    pub dimension: Option<usize>,
    pub radius: f64,
    pub ratio: f64,
    pub samples: usize,
    pub dataset: Option<PathBuf>,
    pub has_header: bool,
    pub maps: Vec<MapSpec>,
    pub map_seed: Option<u64>,
    pub strategies: Vec<StrategyKind>,
    pub max_iters: usize,
    pub gap_tol: f64,
    pub initial_constant: f64,
    pub directional_constant: Option<f64>,
    pub modified_constant: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ProblemKind, strategies: Vec<StrategyKind>) -> Self {
        Self {
            kind,
            dimension: None,
            radius: 1.0,
            ratio: 1.1,
            samples: 500,
            dataset: None,
            has_header: false,
            maps: vec![MapSpec::Identity],
            map_seed: None,
            strategies,
            max_iters: 1000,
            gap_tol: 1e-10,
            initial_constant: 1.0,
            directional_constant: None,
            modified_constant: None,
            seed: None,
            output_dir: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension.unwrap_or(match self.kind {
            ProblemKind::Projection => 20,
            _ => 50,
        })
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let list = |items: Vec<String>| items.join(", ");
        let _ = writeln!(s, "[problem]");
        let _ = writeln!(s, "kind = {}", self.kind.name());
        if let Some(d) = self.dimension {
            let _ = writeln!(s, "dimension = {d}");
        }
        let _ = writeln!(s, "radius = {}", self.radius);
        let _ = writeln!(s, "ratio = {}", self.ratio);
        let _ = writeln!(s, "samples = {}", self.samples);
        if let Some(p) = &self.dataset {
            let _ = writeln!(s, "dataset = {}", p.display());
        }
        let _ = writeln!(s, "has_header = {}", self.has_header);
        let _ = writeln!(s, "\n[map]");
        let _ = writeln!(s, "condition_numbers = {}", list(self.maps.iter().map(|m| m.to_string()).collect()));
        if let Some(seed) = self.map_seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "strategies = {}", list(self.strategies.iter().map(|k| k.name().to_string()).collect()));
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "gap_tol = {:e}", self.gap_tol);
        let _ = writeln!(s, "initial_constant = {}", self.initial_constant);
        if let Some(c) = self.directional_constant {
            let _ = writeln!(s, "directional_constant = {c}");
        }
        if let Some(c) = self.modified_constant {
            let _ = writeln!(s, "modified_constant = {c}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "\n[output]\ndir = {}", dir.display());
        }
        s
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("problem", &["kind", "dimension", "radius", "ratio", "samples", "dataset", "has_header"]),
    ("map", &["condition_numbers", "seed"]),
    (
        "run",
        &[
            "strategies",
            "max_iters",
            "gap_tol",
            "initial_constant",
            "directional_constant",
            "modified_constant",
            "seed",
        ],
    ),
    ("output", &["dir"]),
];

struct Entry {
    value: String,
    line: usize,
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line { line, message: message.into() }
}

fn scalar<T: FromStr>(e: &Entry, key: &str) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| at(e.line, format!("malformed value '{}' for '{key}'", e.value)))
}

fn positive(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    let v: f64 = scalar(e, key)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(at(e.line, format!("'{key}' must be positive, got {}", e.value)))
    }
}

fn list<T>(e: &Entry, parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, ConfigError> {
    let items: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(at(e.line, format!("empty item in list '{}'", e.value)));
    }
    items.into_iter().map(|s| parse(s).map_err(|m| at(e.line, m))).collect()
}

/// Parses configuration text. Keys are validated against the known sections.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut entries: BTreeMap<(String, String), Entry> = BTreeMap::new();
    let mut section: Option<&'static str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name =
                name.strip_suffix(']').ok_or_else(|| at(line, format!("malformed section header '{content}'")))?.trim();
            section = Some(
                KEYS.iter()
                    .find(|(s, _)| *s == name)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| at(line, format!("unknown section '{name}'")))?,
            );
            continue;
        }
        let (key, value) =
            content.split_once('=').ok_or_else(|| at(line, format!("expected 'key = value', found '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| at(line, format!("key '{key}' appears before any section")))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(at(line, format!("unknown key '{key}' in section [{sec}]")));
        }
        if value.is_empty() {
            return Err(at(line, format!("empty value for '{key}'")));
        }
        if let Some(prev) = entries.get(&(sec.to_string(), key.to_string())) {
            return Err(at(line, format!("duplicate key '{key}' in [{sec}] (first set on line {})", prev.line)));
        }
        entries.insert((sec.to_string(), key.to_string()), Entry { value: value.to_string(), line });
    }

    let get = |s: &str, k: &str| entries.get(&(s.to_string(), k.to_string()));
    let missing: Vec<String> = [("problem", "kind"), ("run", "strategies")]
        .iter()
        .filter(|(s, k)| get(s, k).is_none())
        .map(|(s, k)| format!("{s}.{k}"))
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing));
    }

    let kind_entry = get("problem", "kind").expect("checked above");
    let kind: ProblemKind = kind_entry.value.parse().map_err(|m: String| at(kind_entry.line, m))?;
    let strategies = list(get("run", "strategies").expect("checked above"), |s| {
        StrategyKind::from_str(s).map_err(|e| e.to_string())
    })?;
    let mut c = ExperimentConfig::new(kind, strategies);
    if let Some(e) = get("problem", "dimension") {
        let d: usize = scalar(e, "dimension")?;
        if d == 0 {
            return Err(at(e.line, "'dimension' must be at least 1"));
        }
        c.dimension = Some(d);
    }
    if let Some(e) = get("problem", "radius") {
        c.radius = positive(e, "radius")?;
    }
    if let Some(e) = get("problem", "ratio") {
        c.ratio = positive(e, "ratio")?;
    }
    if let Some(e) = get("problem", "samples") {
        c.samples = scalar(e, "samples")?;
        if c.samples == 0 {
            return Err(at(e.line, "'samples' must be at least 1"));
        }
    }
    if let Some(e) = get("problem", "dataset") {
        c.dataset = Some(PathBuf::from(&e.value));
    }
    if let Some(e) = get("problem", "has_header") {
        c.has_header = scalar(e, "has_header")?;
    }
    if let Some(e) = get("map", "condition_numbers") {
        c.maps = list(e, MapSpec::from_str)?;
    }
    if let Some(e) = get("map", "seed") {
        c.map_seed = Some(scalar(e, "seed")?);
    }
    if let Some(e) = get("run", "max_iters") {
        c.max_iters = scalar(e, "max_iters")?;
        if c.max_iters == 0 {
            return Err(at(e.line, "'max_iters' must be at least 1"));
        }
    }
    if let Some(e) = get("run", "gap_tol") {
        c.gap_tol = scalar(e, "gap_tol")?;
        if !(c.gap_tol >= 0.0) {
            return Err(at(e.line, "'gap_tol' must be nonnegative"));
        }
    }
    if let Some(e) = get("run", "initial_constant") {
        c.initial_constant = positive(e, "initial_constant")?;
    }
    if let Some(e) = get("run", "directional_constant") {
        c.directional_constant = Some(positive(e, "directional_constant")?);
    }
    if let Some(e) = get("run", "modified_constant") {
        c.modified_constant = Some(positive(e, "modified_constant")?);
    }
    if let Some(e) = get("run", "seed") {
        c.seed = Some(scalar(e, "seed")?);
    }
    if let Some(e) = get("output", "dir") {
        c.output_dir = Some(PathBuf::from(&e.value));
    }
    for (kind, key, value) in [
        (StrategyKind::DirectionalFixed, "directional_constant", c.directional_constant),
        (StrategyKind::Modified, "modified_constant", c.modified_constant),
    ] {
        if c.strategies.contains(&kind) && value.is_none() {
            return Err(ConfigError::Invalid(format!("strategy '{}' needs [run] {key}", kind.name())));
        }
    }
    Ok(c)
}

/// Reads and parses a config file; a relative dataset path is resolved against
/// the file's directory and must exist.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    let mut config = parse_config_str(&text)?;
    if let Some(ds) = &config.dataset {
        let resolved =
            if ds.is_relative() { path.parent().map(|p| p.join(ds)).unwrap_or_else(|| ds.clone()) } else { ds.clone() };
        if !resolved.exists() {
            return Err(ConfigError::Invalid(format!("dataset {} does not exist", resolved.display())));
        }
        config.dataset = Some(resolved);
    }
    Ok(config)
}
