//! Experiment drivers: configuration in, one CSV row per replica and
//! parameter point out, plus a summary computed from those rows alone.
//!
//! Replica `j` draws everything from streams under `RngSeed::new(master, j)`,
//! and replicas are evaluated in parallel but collected in order, so output
//! depends only on the configuration.

pub mod config;
mod connectivity;
mod indist;
mod intersection;
pub mod record;
mod tail;

use std::fmt;

use thiserror::Error;

pub use config::{parse_config, to_toml, ConfigError, ExperimentConfig, ExperimentName};
pub use connectivity::{run_connectivity_transition, summarize_connectivity, ConnectivityPoint};
pub use indist::{run_indistinguishability, summarize_indistinguishability, IndistSummary, TupleEstimate};
pub use intersection::{
    auto_side, run_intersection_scaling, summarize_intersection, IntersectionDimension, IntersectionSummary,
};
pub use record::{emit_csv, write_csv, Cell, RecordError, StatsRecord};
pub use tail::{run_tail_decorrelation, summarize_tail, TailPoint, TailSummary};

use crate::coupling::CouplingError;
use crate::forest::PropertyError;
use crate::graph::{BoxSpec, GraphError};
use crate::wilson::SampleError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("projected {projected} vertices exceeds the limit of {limit}; raise [limits] max_vertices to proceed")]
    ResourceGuard { projected: usize, limit: usize },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error(transparent)]
    Record(#[from] RecordError),
}

impl From<SampleError> for ExperimentError {
    fn from(e: SampleError) -> Self {
        ExperimentError::Invariant(e.to_string())
    }
}

impl From<PropertyError> for ExperimentError {
    fn from(e: PropertyError) -> Self {
        ExperimentError::Config(ConfigError::Invalid(e.to_string()))
    }
}

impl From<GraphError> for ExperimentError {
    fn from(e: GraphError) -> Self {
        ExperimentError::Config(ConfigError::Invalid(e.to_string()))
    }
}

impl From<CouplingError> for ExperimentError {
    fn from(e: CouplingError) -> Self {
        match e {
            CouplingError::Property(p) => p.into(),
            other => ExperimentError::Invariant(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Summary {
    Connectivity(Vec<ConnectivityPoint>),
    Intersection(IntersectionSummary),
    Indistinguishability(IndistSummary),
    Tail(TailSummary),
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Summary::Connectivity(points) => {
                writeln!(f, "dimension side distance replicas p_same_tree se mean_components se")?;
                for p in points {
                    writeln!(
                        f,
                        "{} {} {} {} {:.4} {:.4} {:.2} {:.2}",
                        p.dimension,
                        p.side,
                        p.distance,
                        p.same_tree.trials,
                        p.same_tree.estimate().unwrap_or(f64::NAN),
                        p.same_tree.se().unwrap_or(f64::NAN),
                        p.components.estimate().unwrap_or(f64::NAN),
                        p.components.se().unwrap_or(f64::NAN),
                    )?;
                }
                Ok(())
            }
            Summary::Intersection(s) => write!(f, "{s}"),
            Summary::Indistinguishability(s) => write!(f, "{s}"),
            Summary::Tail(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub records: Vec<StatsRecord>,
    pub summary: Summary,
}

/// Largest graph (or walk-trace vertex count) the experiment would build.
pub fn projected_vertices(cfg: &ExperimentConfig) -> Result<usize, ExperimentError> {
    let box_size = |spec: &BoxSpec| -> Result<usize, ExperimentError> {
        spec.validate()?;
        Ok(spec.vertex_count())
    };
    Ok(match cfg.experiment.name {
        ExperimentName::Connectivity => {
            let section = cfg.require(&cfg.connectivity, "connectivity")?;
            let mut most = 0;
            for &(d, l) in &section.boxes {
                most = most.max(box_size(&BoxSpec::new(d, l, section.boundary))?);
            }
            most
        }
        ExperimentName::Intersection => {
            let section = cfg.require(&cfg.intersection, "intersection")?;
            2 * (intersection::walk_length(section) + 1)
        }
        ExperimentName::Indistinguishability | ExperimentName::TailDecorrelation => box_size(cfg.lattice()?)?,
    })
}

/// Refuses to start when the projected size exceeds the configured limit.
pub fn check_resources(cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let projected = projected_vertices(cfg)?;
    if projected > cfg.limits.max_vertices {
        return Err(ExperimentError::ResourceGuard {
            projected,
            limit: cfg.limits.max_vertices,
        });
    }
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, ExperimentError> {
    check_resources(cfg)?;
    log::info!(
        "{}: replicas {:?}, master seed {}",
        cfg.experiment.name.as_str(),
        cfg.replica_range(),
        cfg.seeds.master
    );
    Ok(match cfg.experiment.name {
        ExperimentName::Connectivity => {
            let records = run_connectivity_transition(cfg)?;
            let summary = Summary::Connectivity(summarize_connectivity(&records));
            Report { records, summary }
        }
        ExperimentName::Intersection => {
            let records = run_intersection_scaling(cfg)?;
            let summary = Summary::Intersection(summarize_intersection(&records));
            Report { records, summary }
        }
        ExperimentName::Indistinguishability => {
            let records = run_indistinguishability(cfg)?;
            let summary = Summary::Indistinguishability(summarize_indistinguishability(&records)?);
            Report { records, summary }
        }
        ExperimentName::TailDecorrelation => {
            let records = run_tail_decorrelation(cfg)?;
            let summary = Summary::Tail(summarize_tail(&records)?);
            Report { records, summary }
        }
    })
}

fn int_at(r: &StatsRecord, column: &str) -> Option<i64> {
    match r.get(column) {
        Some(Cell::Int(v)) => Some(*v),
        _ => None,
    }
}

fn flag_at(r: &StatsRecord, column: &str) -> Option<bool> {
    int_at(r, column).map(|v| v != 0)
}

fn text_at<'r>(r: &'r StatsRecord, column: &str) -> Option<&'r str> {
    match r.get(column) {
        Some(Cell::Text(s)) => Some(s),
        _ => None,
    }
}

/// Lattice coordinates to a vertex id, with a config error on a bad point.
fn vertex_at(spec: &BoxSpec, coords: &[i32]) -> Result<usize, ExperimentError> {
    if coords.len() != spec.dimension {
        return Err(ConfigError::Invalid(format!(
            "point {coords:?} has {} coordinates, the lattice has dimension {}",
            coords.len(),
            spec.dimension
        ))
        .into());
    }
    spec.index_of(coords)
        .ok_or_else(|| ConfigError::Invalid(format!("point {coords:?} lies outside the box")).into())
}
