//! Whether two fixed sites share a tree, across box sizes and dimensions.

use rayon::prelude::*;

use super::{flag_at, int_at, vertex_at, ExperimentConfig, ExperimentError, StatsRecord};
use crate::coupling::{component_view, default_root};
use crate::forest::components;
use crate::graph::{make_box, BoxSpec};
use crate::rng::RngSeed;
use crate::stats::{Mean, Proportion};
use crate::wilson::{wilson_ust_with, WilsonOptions};

const NAME: &str = "connectivity";

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityPoint {
    pub dimension: usize,
    pub side: usize,
    pub distance: usize,
    pub same_tree: Proportion,
    /// Components among the sites.
    pub components: Mean,
}

/// Stream lane of a box, stable under reordering of the box list.
fn box_lane(dimension: usize, side: usize) -> u64 {
    ((dimension as u64) << 32) | side as u64
}

/// One row per (box, replica), box major. The pair is the box centre and
/// the site `distance` steps along the first axis.
pub fn run_connectivity_transition(cfg: &ExperimentConfig) -> Result<Vec<StatsRecord>, ExperimentError> {
    let section = cfg.require(&cfg.connectivity, "connectivity")?;
    let mut records = Vec::new();
    for &(dimension, side) in &section.boxes {
        let spec = BoxSpec::new(dimension, side, section.boundary);
        let g = make_box(&spec)?;
        let center = spec.center();
        let mut far = center.clone();
        far[0] += section.distance as i32;
        let pair = [vertex_at(&spec, &center)?, vertex_at(&spec, &far)?];
        let opts = WilsonOptions {
            cap: Some(cfg.limits.cap_factor.saturating_mul(g.vertex_count())),
            ..WilsonOptions::default()
        };
        let root = default_root(&g);
        let sites = spec.site_count();
        let rows: Vec<StatsRecord> = cfg
            .replica_range()
            .into_par_iter()
            .map(|j| {
                let seed = RngSeed::new(cfg.seeds.master, j);
                let f = wilson_ust_with(&g, root, &[], &mut seed.child(box_lane(dimension, side)).rng(), &opts)?;
                let view = component_view(&f, &g);
                let labels = components(&view);
                let site_components = labels.count() - (g.vertex_count() - sites);
                Ok(StatsRecord::new(NAME, j, seed)
                    .with("dimension", dimension)
                    .with("side", side)
                    .with("boundary", spec.boundary.to_string())
                    .with("distance", section.distance)
                    .with("same_tree", labels.same(pair[0], pair[1]))
                    .with("components", site_components))
            })
            .collect::<Result<_, ExperimentError>>()?;
        records.extend(rows);
    }
    Ok(records)
}

/// Per-box estimates, in order of first appearance.
pub fn summarize_connectivity(records: &[StatsRecord]) -> Vec<ConnectivityPoint> {
    let mut points: Vec<ConnectivityPoint> = Vec::new();
    for r in records {
        let (Some(d), Some(l), Some(dist)) = (int_at(r, "dimension"), int_at(r, "side"), int_at(r, "distance")) else {
            continue;
        };
        let (d, l) = (d as usize, l as usize);
        let i = match points.iter().position(|p| p.dimension == d && p.side == l) {
            Some(i) => i,
            None => {
                points.push(ConnectivityPoint {
                    dimension: d,
                    side: l,
                    distance: dist as usize,
                    same_tree: Proportion::default(),
                    components: Mean::default(),
                });
                points.len() - 1
            }
        };
        if let Some(same) = flag_at(r, "same_tree") {
            points[i].same_tree.push(same);
        }
        if let Some(c) = int_at(r, "components") {
            points[i].components.push(c as f64);
        }
    }
    points
}
