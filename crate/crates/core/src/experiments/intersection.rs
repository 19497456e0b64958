//! Intersections of two independent lazy walks from the origin of a torus
//! large enough that wraparound is rare within the horizon.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;

use super::config::IntersectionSection;
use super::{flag_at, int_at, text_at, ExperimentConfig, ExperimentError, StatsRecord};
use crate::rng::RngSeed;
use crate::stats::{Mean, Proportion};
use crate::walks::{draw_lazy_walk, intersection_count, ImplicitTorus, WalkPath};

const NAME: &str = "intersection";

/// Steps each walk takes: enough for the longest horizon and every shifted window.
pub(super) fn walk_length(section: &IntersectionSection) -> usize {
    let horizon = section.horizons.iter().copied().max().unwrap_or(0);
    let shifted = section
        .shifts
        .iter()
        .map(|&m| m + section.shift_horizon)
        .max()
        .unwrap_or(0);
    horizon.max(shifted)
}

/// Odd torus side with half-width four per-coordinate standard deviations
/// of a `steps`-step lazy walk in dimension `d`.
pub fn auto_side(dimension: usize, steps: usize) -> usize {
    let sd = (steps as f64 / (2.0 * dimension as f64)).sqrt();
    2 * ((4.0 * sd).ceil() as usize).max(2) + 1
}

fn strides(torus: &ImplicitTorus) -> Vec<usize> {
    (0..torus.dim()).map(|j| torus.side().pow(j as u32)).collect()
}

/// Whether any step of `w` crosses the periodic seam. A step that stays on
/// the torus interior changes the id by zero or exactly one stride.
fn wrapped(w: &WalkPath, strides: &[usize]) -> bool {
    w.vertices()
        .windows(2)
        .any(|p| p[0] != p[1] && !strides.contains(&p[0].abs_diff(p[1])))
}

fn first_visits(w: &WalkPath) -> HashMap<usize, usize> {
    let mut first = HashMap::with_capacity(w.vertices().len());
    for (t, &v) in w.vertices().iter().enumerate() {
        first.entry(v).or_insert(w.start_time() + t);
    }
    first
}

/// Sorted times by which each commonly visited vertex has been seen by both walks.
fn joint_visit_times(a: &WalkPath, b: &WalkPath) -> Vec<usize> {
    let fa = first_visits(a);
    let mut times: Vec<usize> = first_visits(b)
        .into_iter()
        .filter_map(|(v, tb)| fa.get(&v).map(|&ta| ta.max(tb)))
        .collect();
    times.sort_unstable();
    times
}

fn side_for(section: &IntersectionSection, dimension: usize) -> usize {
    if section.side > 0 {
        section.side
    } else {
        auto_side(dimension, walk_length(section))
    }
}

/// Rows per (dimension, replica): one `horizon` row per horizon `n` with the
/// number of distinct vertices both walks visit by time `n`, then one `shift`
/// row per `m` with the count over times `m..=m + shift_horizon`.
pub fn run_intersection_scaling(cfg: &ExperimentConfig) -> Result<Vec<StatsRecord>, ExperimentError> {
    let section = cfg.require(&cfg.intersection, "intersection")?;
    let steps = walk_length(section);
    let mut records = Vec::new();
    for &dimension in &section.dimensions {
        let side = side_for(section, dimension);
        if dimension == 0 || side < 3 || (side as f64).powi(dimension as i32) >= 2f64.powi(62) {
            return Err(super::ConfigError::Invalid(format!(
                "no usable torus of side {side} in dimension {dimension}"
            ))
            .into());
        }
        let torus = ImplicitTorus::new(dimension, side);
        let strides = strides(&torus);
        let origin = torus.center();
        let rows: Vec<Vec<StatsRecord>> = cfg
            .replica_range()
            .into_par_iter()
            .map(|j| {
                let seed = RngSeed::new(cfg.seeds.master, j);
                let lane = seed.child(dimension as u64);
                let walks = [0u64, 1]
                    .map(|i| draw_lazy_walk(&torus, origin, steps, &mut lane.child(i).rng()).expect("torus walks"));
                let wrap = walks.iter().any(|w| wrapped(w, &strides));
                let times = joint_visit_times(&walks[0], &walks[1]);
                let row = |variant: &str, horizon: usize, shift: usize, count: usize| {
                    StatsRecord::new(NAME, j, seed)
                        .with("dimension", dimension)
                        .with("side", side)
                        .with("variant", variant)
                        .with("horizon", horizon)
                        .with("shift", shift)
                        .with("count", count)
                        .with("intersected", count > 0)
                        .with("wrapped", wrap)
                };
                let mut out = Vec::with_capacity(section.horizons.len() + section.shifts.len());
                for &n in &section.horizons {
                    out.push(row("horizon", n, 0, times.partition_point(|&t| t <= n)));
                }
                for &m in &section.shifts {
                    let window = walks.each_ref().map(|w| {
                        w.shifted(m)
                            .expect("walks cover every shift")
                            .truncated_at(m + section.shift_horizon)
                    });
                    out.push(row("shift", section.shift_horizon, m, intersection_count(&window[0], &window[1], m)));
                }
                out
            })
            .collect();
        records.extend(rows.into_iter().flatten());
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionDimension {
    pub dimension: usize,
    pub side: usize,
    /// Mean count per horizon, in increasing horizon order.
    pub horizons: Vec<(usize, Mean)>,
    /// Per-replica difference between the counts at the two largest horizons.
    pub growth: Option<Mean>,
    /// Probability of any intersection in the shifted window, per shift.
    pub shifts: Vec<(usize, Proportion)>,
    pub wrapped: Proportion,
}

impl IntersectionDimension {
    /// Growth between the two largest horizons in standard errors; infinite
    /// for a positive difference with no spread.
    pub fn growth_z(&self) -> Option<f64> {
        let g = self.growth.as_ref()?;
        let (mean, se) = (g.estimate()?, g.se()?);
        Some(if se > 0.0 {
            mean / se
        } else if mean > 0.0 {
            f64::INFINITY
        } else {
            0.0
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionSummary {
    pub dimensions: Vec<IntersectionDimension>,
}

pub fn summarize_intersection(records: &[StatsRecord]) -> IntersectionSummary {
    // (dimension) -> side, (replica -> horizon -> count), shift -> flags, wrap flags
    type Acc = (usize, BTreeMap<u64, BTreeMap<usize, i64>>, BTreeMap<usize, Proportion>, BTreeMap<u64, bool>);
    let mut acc: BTreeMap<usize, Acc> = BTreeMap::new();
    for r in records {
        let (Some(d), Some(side)) = (int_at(r, "dimension"), int_at(r, "side")) else {
            continue;
        };
        let entry = acc
            .entry(d as usize)
            .or_insert_with(|| (side as usize, BTreeMap::new(), BTreeMap::new(), BTreeMap::new()));
        entry.3.insert(r.replica, flag_at(r, "wrapped").unwrap_or(false));
        match (text_at(r, "variant"), int_at(r, "count")) {
            (Some("horizon"), Some(c)) => {
                let n = int_at(r, "horizon").unwrap_or(0) as usize;
                entry.1.entry(r.replica).or_default().insert(n, c);
            }
            (Some("shift"), Some(c)) => {
                let m = int_at(r, "shift").unwrap_or(0) as usize;
                entry.2.entry(m).or_default().push(c > 0);
            }
            _ => {}
        }
    }
    let dimensions = acc
        .into_iter()
        .map(|(dimension, (side, counts, shifts, wraps))| {
            let mut horizons: BTreeMap<usize, Mean> = BTreeMap::new();
            for per_horizon in counts.values() {
                for (&n, &c) in per_horizon {
                    horizons.entry(n).or_default().push(c as f64);
                }
            }
            let keys: Vec<usize> = horizons.keys().copied().collect();
            let growth = (keys.len() >= 2).then(|| {
                let (lo, hi) = (keys[keys.len() - 2], keys[keys.len() - 1]);
                Mean::from_values(
                    counts
                        .values()
                        .filter_map(|h| Some((h.get(&hi)? - h.get(&lo)?) as f64)),
                )
            });
            IntersectionDimension {
                dimension,
                side,
                horizons: horizons.into_iter().collect(),
                growth,
                shifts: shifts.into_iter().collect(),
                wrapped: Proportion::from_flags(wraps.into_values()),
            }
        })
        .collect();
    IntersectionSummary { dimensions }
}

impl fmt::Display for IntersectionSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.dimensions {
            writeln!(f, "dimension {} (torus side {})", d.dimension, d.side)?;
            for (n, m) in &d.horizons {
                writeln!(
                    f,
                    "  horizon {n}: mean count {:.3} (se {:.3})",
                    m.estimate().unwrap_or(f64::NAN),
                    m.se().unwrap_or(f64::NAN)
                )?;
            }
            if let (Some(g), Some(z)) = (&d.growth, d.growth_z()) {
                writeln!(
                    f,
                    "  growth between the last two horizons: {:.3} (se {:.3}, z {:.2}) -> {}",
                    g.estimate().unwrap_or(f64::NAN),
                    g.se().unwrap_or(f64::NAN),
                    z,
                    if z > 3.0 { "growing" } else { "saturated" }
                )?;
            }
            for (m, p) in &d.shifts {
                writeln!(
                    f,
                    "  shift {m}: P(intersect) {:.4} (se {:.4})",
                    p.estimate().unwrap_or(f64::NAN),
                    p.se().unwrap_or(f64::NAN)
                )?;
            }
            let wrap = d.wrapped.estimate().unwrap_or(0.0);
            writeln!(f, "  replicas with wraparound: {:.2}%", 100.0 * wrap)?;
            if wrap > 0.01 {
                writeln!(f, "  warning: wraparound above 1%, enlarge the torus")?;
            }
        }
        Ok(())
    }
}
