//! Flat `key = value` scenario configuration.

use crate::error::CliError;
use cslab_core::renorm::{FrameKind, TubeScenario};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Tube,
    GraphLocal,
}

/// Graph `t = 1 + c(x₁² + x₂²)` sampled on a square table around the origin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphConfig {
    pub c: f64,
    pub half_width: f64,
    pub points: usize,
}

impl GraphConfig {
    pub fn height(&self, x: f64, y: f64) -> f64 {
        1.0 + self.c * (x * x + y * y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(skip)]
    pub tube: TubeScenario,
    pub graph: GraphConfig,
    /// Seed of the randomly placed identity checks.
    pub seed: u64,
    pub check_cells: usize,
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Every accepted key with its default.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("scenario", "tube"),
    ("u0", "1"),
    ("length", "2"),
    ("twist", "0"),
    ("frame", "fermi"),
    ("n_s", "1"),
    ("n_theta", "1"),
    ("beta", "0.3"),
    ("n1", "64"),
    ("n2", "64"),
    ("r_max", "4"),
    ("n_r", "17"),
    ("nodes_per_interval", "4"),
    ("fd_step", "0.001"),
    ("quadrature", "gauss-legendre"),
    ("graph_c", "0.25"),
    ("graph_half_width", "0.5"),
    ("graph_points", "5"),
    ("seed", "7"),
    ("check_cells", "16"),
    ("csv", "report.csv"),
    ("json", "report.json"),
];

/// Raw key/value pairs after overrides, before typing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

fn split_pair(line: &str, origin: &str) -> Result<(String, String), CliError> {
    let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("{origin}: expected key = value, got `{line}`")))?;
    let (k, v) = (k.trim(), v.trim());
    if !DEFAULTS.iter().any(|(d, _)| *d == k) {
        return Err(CliError::Config(format!("{origin}: unknown key `{k}`")));
    }
    if v.is_empty() {
        return Err(CliError::Config(format!("{origin}: empty value for `{k}`")));
    }
    Ok((k.to_string(), v.to_string()))
}

impl RawConfig {
    /// Parses file text; `#` starts a comment, blank lines are skipped, keys may appear once.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line, &format!("line {}", n + 1))?;
            if values.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        Ok(Self { values })
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = split_pair(pair, "--set")?;
        self.values.insert(k, v);
        Ok(())
    }

    fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| DEFAULTS.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).expect("every key has a default"))
    }

    fn typed<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.get(key);
        v.parse().map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{v}`")))
    }

    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let kind = match self.get("scenario") {
            "tube" => ScenarioKind::Tube,
            "graph-local" => ScenarioKind::GraphLocal,
            other => return Err(CliError::Config(format!("`scenario` must be tube or graph-local, got `{other}`"))),
        };
        let (n_s, n_theta) = (self.typed("n_s")?, self.typed("n_theta")?);
        let frame = match self.get("frame") {
            "fermi" => FrameKind::Fermi,
            "twisted" => FrameKind::Twisted { n_s, n_theta },
            "tilted" => FrameKind::Tilted { beta: self.typed("beta")?, n_s, n_theta },
            other => return Err(CliError::Config(format!("`frame` must be fermi, twisted or tilted, got `{other}`"))),
        };
        if self.get("quadrature") != "gauss-legendre" {
            return Err(CliError::Config(format!("`quadrature` supports only gauss-legendre, got `{}`", self.get("quadrature"))));
        }
        let n_r: usize = self.typed("n_r")?;
        if n_r < 4 {
            return Err(CliError::Config(format!("`n_r` counts sample radii including 0 and must be >= 4, got {n_r}")));
        }
        let tube = TubeScenario {
            u0: self.typed("u0")?,
            length: self.typed("length")?,
            twist: self.typed("twist")?,
            frame,
            n1: self.typed("n1")?,
            n2: self.typed("n2")?,
            r_max: self.typed("r_max")?,
            intervals: n_r - 1,
            per_interval: self.typed("nodes_per_interval")?,
            fd_step: self.typed("fd_step")?,
        };
        tube.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if ![tube.u0, tube.length, tube.twist, tube.r_max, tube.fd_step].iter().all(|x| x.is_finite()) {
            return Err(CliError::Config("tube parameters must be finite".into()));
        }
        let graph = GraphConfig { c: self.typed("graph_c")?, half_width: self.typed("graph_half_width")?, points: self.typed("graph_points")? };
        if !(graph.half_width > 0.0) || graph.points < 1 || !graph.c.is_finite() {
            return Err(CliError::Config("graph needs half_width > 0, points >= 1 and finite c".into()));
        }
        if !(graph.height(graph.half_width, graph.half_width) > 0.0) {
            return Err(CliError::Config("graph height must stay positive on the table".into()));
        }
        Ok(ScenarioConfig {
            kind,
            tube,
            graph,
            seed: self.typed("seed")?,
            check_cells: self.typed("check_cells")?,
            csv: PathBuf::from(self.get("csv")),
            json: PathBuf::from(self.get("json")),
        })
    }

    /// Effective configuration, defaults included, in key order.
    pub fn effective(&self) -> BTreeMap<String, String> {
        DEFAULTS.iter().map(|(k, _)| (k.to_string(), self.get(k).to_string())).collect()
    }
}
