//! Experiment configuration files.
//!
//! TOML with sections; every key is checked and unknown keys are rejected.
//!
//! ```toml
//! [experiment]
//! name = "indistinguishability"   # connectivity | intersection | indistinguishability | tail-decorrelation
//! output = "indist.csv"           # optional
//!
//! [seeds]
//! master = 1
//! replicas = 10000
//! first_replica = 0               # optional; replicas are first_replica..first_replica+replicas
//!
//! [lattice]                       # indistinguishability, tail-decorrelation
//! dimension = 5
//! side = 10
//! boundary = "wired"              # torus | wired | free
//!
//! [property]                      # indistinguishability
//! kind = "adjacency-count"        # adjacency-count | component-size | always-true | always-false
//! arity = 2
//! threshold = 5                   # adjacency-count
//! window_fraction = 0.5           # adjacency-count; omitted means the whole graph
//! min_size = 10                   # component-size
//!
//! [indistinguishability]
//! tuples = [[[4, 4, 4, 4, 4], [5, 4, 4, 4, 4]], [[5, 4, 4, 4, 4], [4, 4, 4, 4, 4]]]
//! lead_tuple = 0                  # tuple used for the walk-limit comparison
//! m_ladder = [0, 2, 4, 8, 16]
//!
//! [connectivity]
//! boundary = "wired"
//! distance = 2
//! boxes = [[2, 8], [2, 16], [5, 6]]   # [dimension, side]
//!
//! [intersection]
//! dimensions = [3, 5]
//! horizons = [10000, 20000]
//! shifts = [0, 16, 64, 256]
//! shift_horizon = 2000
//! side = 0                        # torus side; 0 picks one per dimension
//!
//! [tail]
//! inner_radius = 1
//! radii = [1, 2, 4, 6, 8]
//! window_radius = 1
//! selection_samples = 1000
//!
//! [limits]                        # optional
//! max_vertices = 2000000
//! cap_factor = 100
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{CustomPredicate, PropertyKind, PropertySpec, Window};
use crate::graph::{Boundary, BoxSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Connectivity,
    Intersection,
    Indistinguishability,
    TailDecorrelation,
}

impl ExperimentName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::Connectivity => "connectivity",
            ExperimentName::Intersection => "intersection",
            ExperimentName::Indistinguishability => "indistinguishability",
            ExperimentName::TailDecorrelation => "tail-decorrelation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: ExperimentName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub master: u64,
    pub replicas: u64,
    #[serde(default)]
    pub first_replica: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKindName {
    AdjacencyCount,
    ComponentSize,
    AlwaysTrue,
    AlwaysFalse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySection {
    pub kind: PropertyKindName,
    pub arity: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_size: Option<usize>,
}

impl PropertySection {
    pub fn to_spec(&self) -> Result<PropertySpec, ConfigError> {
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| ConfigError::Missing(vec![format!("property.{key}")]))
        };
        let kind = match self.kind {
            PropertyKindName::AdjacencyCount => PropertyKind::AdjacencyCount {
                threshold: need(self.threshold, "threshold")?,
                window: match self.window_fraction {
                    None => Window::Full,
                    Some(fraction) => Window::InnerBox { fraction },
                },
            },
            PropertyKindName::ComponentSize => PropertyKind::ComponentSize {
                min_size: need(self.min_size, "min_size")?,
            },
            PropertyKindName::AlwaysTrue => PropertyKind::Custom(CustomPredicate::AlwaysTrue),
            PropertyKindName::AlwaysFalse => PropertyKind::Custom(CustomPredicate::AlwaysFalse),
        };
        Ok(PropertySpec {
            arity: self.arity,
            kind,
        })
    }

    /// Compact description for reports, e.g. `adjacency-count(k=2,c=5,w=0.5)`.
    pub fn describe(&self) -> String {
        match self.kind {
            PropertyKindName::AdjacencyCount => format!(
                "adjacency-count(k={},c={},w={})",
                self.arity,
                self.threshold.unwrap_or(0),
                self.window_fraction.map_or("full".to_string(), |f| f.to_string())
            ),
            PropertyKindName::ComponentSize => {
                format!("component-size(k={},s={})", self.arity, self.min_size.unwrap_or(0))
            }
            PropertyKindName::AlwaysTrue => format!("always-true(k={})", self.arity),
            PropertyKindName::AlwaysFalse => format!("always-false(k={})", self.arity),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndistinguishabilitySection {
    pub tuples: Vec<Vec<Vec<i32>>>,
    #[serde(default)]
    pub lead_tuple: usize,
    pub m_ladder: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectivitySection {
    #[serde(default = "wired")]
    pub boundary: Boundary,
    pub distance: usize,
    pub boxes: Vec<(usize, usize)>,
}

fn wired() -> Boundary {
    Boundary::Wired
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionSection {
    pub dimensions: Vec<usize>,
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub shifts: Vec<usize>,
    #[serde(default)]
    pub shift_horizon: usize,
    #[serde(default)]
    pub side: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSection {
    pub inner_radius: usize,
    pub radii: Vec<usize>,
    #[serde(default = "one")]
    pub window_radius: usize,
    #[serde(default = "thousand")]
    pub selection_samples: u64,
}

fn one() -> usize {
    1
}

fn thousand() -> u64 {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_max_vertices")]
    pub max_vertices: usize,
    #[serde(default = "default_cap_factor")]
    pub cap_factor: usize,
}

fn default_max_vertices() -> usize {
    2_000_000
}

fn default_cap_factor() -> usize {
    crate::wilson::DEFAULT_CAP_FACTOR
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_vertices: default_max_vertices(),
            cap_factor: default_cap_factor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub seeds: SeedSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<PropertySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indistinguishability: Option<IndistinguishabilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectivity: Option<ConnectivitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intersection: Option<IntersectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSection>,
    #[serde(default)]
    pub limits: Limits,
}

const REQUIRED: [(&str, &str); 3] = [("experiment", "name"), ("seeds", "master"), ("seeds", "replicas")];

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|(section, key)| {
            table
                .get(*section)
                .and_then(|s| s.as_table())
                .and_then(|s| s.get(*key))
                .is_none()
        })
        .map(|(section, key)| format!("{section}.{key}"))
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing));
    }
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })
}

pub fn to_toml(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("configs serialize to TOML")
}

impl ExperimentConfig {
    pub fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        section
            .as_ref()
            .ok_or_else(|| ConfigError::Missing(vec![format!("[{name}] section")]))
    }

    pub fn lattice(&self) -> Result<&BoxSpec, ConfigError> {
        let spec = self.require(&self.lattice, "lattice")?;
        spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(spec)
    }

    /// Replica ids covered by this run.
    pub fn replica_range(&self) -> std::ops::Range<u64> {
        self.seeds.first_replica..self.seeds.first_replica + self.seeds.replicas
    }
}
