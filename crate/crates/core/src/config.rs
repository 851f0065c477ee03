//! Experiment configuration: defaults, `key=value` config files and flag
//! overrides share a single key namespace mirroring the command-line flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::local_voting::Neighborhood;
use crate::schedule::DEFAULT_SLOTS_PER_FRAME;
use crate::scheduler::SchedulerKind;
use crate::traffic::{DEFAULT_INTERVAL_SLOTS, DEFAULT_PACKETS_PER_CONNECTION};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid value {value:?} for --{key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },

    #[error("unknown configuration key {key:?}{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    UnknownKey { key: String, line: Option<usize> },

    #[error("line {line}: expected key=value")]
    Malformed { line: usize },

    #[error("conflicting options: {0}")]
    Conflict(String),

    #[error("cannot read config file {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TopologySource {
    Generate { nodes: usize, area: f64, radius: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologySource,
    /// Connection counts to sweep over.
    pub connections: Vec<usize>,
    pub packets: usize,
    /// Generation intervals to sweep over; smaller means more load.
    pub intervals: Vec<u64>,
    pub slots: usize,
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
    pub frame_cap: Option<u64>,
    pub neighborhood: Neighborhood,
    pub logs: bool,
    /// Worker threads; 0 picks the number of cores, 1 runs serially.
    pub jobs: usize,
    pub out: PathBuf,
}

pub const DEFAULT_NODES: usize = 50;
pub const DEFAULT_AREA: f64 = 1000.0;
pub const DEFAULT_RADIUS: f64 = 250.0;
pub const DEFAULT_CONNECTIONS: usize = 10;

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: TopologySource::Generate {
                nodes: DEFAULT_NODES,
                area: DEFAULT_AREA,
                radius: DEFAULT_RADIUS,
            },
            connections: vec![DEFAULT_CONNECTIONS],
            packets: DEFAULT_PACKETS_PER_CONNECTION,
            intervals: vec![DEFAULT_INTERVAL_SLOTS],
            slots: DEFAULT_SLOTS_PER_FRAME,
            schedulers: SchedulerKind::ALL.to_vec(),
            seeds: vec![1],
            frame_cap: None,
            neighborhood: Neighborhood::OneHop,
            logs: true,
            jobs: 0,
            out: PathBuf::from("results"),
        }
    }
}

pub const KEYS: [&str; 14] = [
    "nodes",
    "area",
    "radius",
    "topology-file",
    "connections",
    "packets",
    "interval",
    "slots",
    "scheduler",
    "seeds",
    "frame-cap",
    "neighborhood",
    "logs",
    "jobs",
];

/// Accumulates `key=value` settings from any source, later ones winning.
#[derive(Clone, Debug, Default)]
pub struct ConfigBuilder {
    settings: Vec<(String, String)>,
    out: Option<PathBuf>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<&mut Self, ConfigError> {
        if key == "out" {
            self.out = Some(PathBuf::from(value.into()));
            return Ok(self);
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                line: None,
            });
        }
        self.settings.push((key.to_string(), value.into()));
        Ok(self)
    }

    /// Reads a flat `key=value` file. Blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<&mut Self, ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Malformed { line: idx + 1 })?;
            let key = key.trim().trim_start_matches("--");
            self.set(key, value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey {
                    key,
                    line: Some(idx + 1),
                },
                other => other,
            })?;
        }
        Ok(self)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<&mut Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.merge_text(&text)
    }

    pub fn build(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let (mut nodes, mut area, mut radius) = (DEFAULT_NODES, DEFAULT_AREA, DEFAULT_RADIUS);
        let mut file: Option<PathBuf> = None;
        let mut geometry_key: Option<&str> = None;

        for (key, value) in &self.settings {
            let bad = |reason: &str| ConfigError::InvalidValue {
                key: key.clone(),
                value: value.clone(),
                reason: reason.to_string(),
            };
            match key.as_str() {
                "nodes" => {
                    nodes = positive(value).map_err(|r| bad(&r))?;
                    geometry_key = Some("nodes");
                }
                "area" => {
                    area = positive_f64(value).map_err(|r| bad(&r))?;
                    geometry_key = Some("area");
                }
                "radius" => {
                    radius = positive_f64(value).map_err(|r| bad(&r))?;
                    geometry_key = Some("radius");
                }
                "topology-file" => {
                    if value.is_empty() {
                        return Err(bad("path must not be empty"));
                    }
                    file = Some(PathBuf::from(value));
                }
                "connections" => {
                    cfg.connections = list(value, positive).map_err(|r| bad(&r))?;
                }
                "packets" => cfg.packets = positive(value).map_err(|r| bad(&r))?,
                "interval" => cfg.intervals = list(value, positive).map_err(|r| bad(&r))?,
                "slots" => cfg.slots = positive(value).map_err(|r| bad(&r))?,
                "scheduler" => cfg.schedulers = schedulers(value).map_err(|r| bad(&r))?,
                "seeds" => cfg.seeds = seeds(value).map_err(|r| bad(&r))?,
                "frame-cap" => {
                    cfg.frame_cap = match value.as_str() {
                        "auto" => None,
                        v => Some(positive(v).map_err(|r| bad(&r))?),
                    }
                }
                "neighborhood" => {
                    cfg.neighborhood = match value.as_str() {
                        "one-hop" | "1" => Neighborhood::OneHop,
                        "two-hop" | "2" => Neighborhood::TwoHop,
                        _ => return Err(bad("expected one-hop or two-hop")),
                    }
                }
                "logs" => {
                    cfg.logs = value
                        .parse()
                        .map_err(|_| bad("expected true or false"))?
                }
                "jobs" => cfg.jobs = value.parse().map_err(|_| bad("expected a thread count"))?,
                _ => unreachable!("keys are validated on insert"),
            }
        }

        cfg.topology = match (file, geometry_key) {
            (Some(path), None) => TopologySource::File(path),
            (Some(_), Some(k)) => {
                return Err(ConfigError::Conflict(format!(
                    "--topology-file cannot be combined with --{k}"
                )))
            }
            (None, _) => TopologySource::Generate { nodes, area, radius },
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn positive<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr + PartialOrd + Default,
{
    let v: T = s.trim().parse().map_err(|_| "not an integer".to_string())?;
    if v <= T::default() {
        return Err("must be positive".into());
    }
    Ok(v)
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| "not a number".to_string())?;
    if !(v > 0.0 && v.is_finite()) {
        return Err("must be positive".into());
    }
    Ok(v)
}

fn list<T>(s: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items: Vec<T> = s.split(',').map(item).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err("list must not be empty".into());
    }
    Ok(items)
}

fn schedulers(s: &str) -> Result<Vec<SchedulerKind>, String> {
    if s.trim() == "all" {
        return Ok(SchedulerKind::ALL.to_vec());
    }
    let mut out: Vec<SchedulerKind> = Vec::new();
    for part in s.split(',') {
        let kind: SchedulerKind = part.trim().parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

/// Comma-separated seeds or inclusive ranges, e.g. `1-20` or `3,7,10-12`.
fn seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
                if a > b {
                    return Err(format!("empty range {part}"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad seed {part:?}"))?),
        }
    }
    if out.is_empty() {
        return Err("seed list must not be empty".into());
    }
    Ok(out)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Effective configuration in the config-file format. Feeding it back
    /// through [`ConfigBuilder::merge_text`] reproduces `self`.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        match &self.topology {
            TopologySource::Generate { nodes, area, radius } => {
                let _ = writeln!(out, "nodes={nodes}\narea={area}\nradius={radius}");
            }
            TopologySource::File(path) => {
                let _ = writeln!(out, "topology-file={}", path.display());
            }
        }
        let _ = writeln!(out, "connections={}", join(&self.connections));
        let _ = writeln!(out, "packets={}", self.packets);
        let _ = writeln!(out, "interval={}", join(&self.intervals));
        let _ = writeln!(out, "slots={}", self.slots);
        let _ = writeln!(out, "scheduler={}", join(&self.schedulers));
        let _ = writeln!(out, "seeds={}", join(&self.seeds));
        let _ = writeln!(
            out,
            "frame-cap={}",
            self.frame_cap.map_or("auto".to_string(), |c| c.to_string())
        );
        let _ = writeln!(
            out,
            "neighborhood={}",
            match self.neighborhood {
                Neighborhood::OneHop => "one-hop",
                Neighborhood::TwoHop => "two-hop",
            }
        );
        let _ = writeln!(out, "logs={}", self.logs);
        let _ = writeln!(out, "jobs={}", self.jobs);
        let _ = writeln!(out, "out={}", self.out.display());
        out
    }
}
