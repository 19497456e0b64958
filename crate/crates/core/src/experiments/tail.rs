//! Decorrelation of the forest far from a ball from the configuration
//! inside it: total variation between the law on a distant window and that
//! law conditioned on a fixed inner configuration.
//!
//! The window at radius `R` is the ball of radius `window_radius` around the
//! site `R + window_radius` steps from the centre along the first axis, so
//! its nearest site is at distance `R`. The inner configuration `A` is the
//! most frequent one on the inner ball among `selection_samples` forests
//! drawn from a stream no replica uses.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use super::{flag_at, int_at, text_at, vertex_at, ConfigError, ExperimentConfig, ExperimentError, StatsRecord};
use crate::coupling::{condition_on_ball, default_root, sample_conditioned, tv_between, window_key, TvEstimate};
use crate::graph::{make_box, EdgeId, Graph, VertexId};
use crate::rng::RngSeed;
use crate::stats::Proportion;
use crate::wilson::{wilson_ust_with, WilsonOptions};

const NAME: &str = "tail-decorrelation";

/// Inner configurations seen fewer times than this are flagged.
pub const MIN_CONFIGURATION_COUNT: u64 = 10;

fn hex(key: u64) -> String {
    format!("{key:016x}")
}

/// The most frequent configuration on `inner` (ties to the smallest key)
/// among `samples` forests, with its count.
pub(crate) fn select_configuration(
    g: &Graph,
    inner: &[EdgeId],
    samples: u64,
    master: u64,
    opts: &WilsonOptions,
) -> Result<(u64, u64), ExperimentError> {
    let selection = RngSeed::new(master, u64::MAX);
    let keys: Vec<u64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let f = wilson_ust_with(g, default_root(g), &[], &mut selection.child(k).rng(), opts)?;
            Ok(window_key(&f, g, inner))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for k in keys {
        *counts.entry(k).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| ConfigError::Invalid("selection_samples must be positive".into()).into())
}

/// Rows per (replica, R): the keys of an unconditional and a conditioned
/// forest on the window at `R`. Each replica draws one forest of each kind
/// and reads every window from it.
pub fn run_tail_decorrelation(cfg: &ExperimentConfig) -> Result<Vec<StatsRecord>, ExperimentError> {
    let spec = cfg.lattice()?;
    let section = cfg.require(&cfg.tail, "tail")?;
    let g = make_box(spec)?;
    let opts = WilsonOptions {
        cap: Some(cfg.limits.cap_factor.saturating_mul(g.vertex_count())),
        ..WilsonOptions::default()
    };
    let center_coords = spec.center();
    let center = vertex_at(spec, &center_coords)?;
    let inner = g.edges_within(&g.ball_mask(center, section.inner_radius));
    if inner.len() > 64 {
        return Err(ConfigError::Invalid(format!(
            "inner ball has {} edges; at most 64 are supported",
            inner.len()
        ))
        .into());
    }
    let windows: Vec<(usize, Vec<EdgeId>)> = section
        .radii
        .iter()
        .map(|&radius| {
            let mut at = center_coords.clone();
            at[0] += (radius + section.window_radius) as i32;
            let c: VertexId = vertex_at(spec, &at)?;
            Ok((radius, g.edges_within(&g.ball_mask(c, section.window_radius))))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let (a_key, a_count) = select_configuration(&g, &inner, section.selection_samples, cfg.seeds.master, &opts)?;
    let a: Vec<EdgeId> = inner
        .iter()
        .enumerate()
        .filter(|&(i, _)| a_key >> i & 1 == 1)
        .map(|(_, &e)| e)
        .collect();
    let q = condition_on_ball(&g, center, section.inner_radius, &a)?;
    let rows: Vec<Vec<StatsRecord>> = cfg
        .replica_range()
        .into_par_iter()
        .map(|j| {
            let seed = RngSeed::new(cfg.seeds.master, j);
            let free = wilson_ust_with(&g, default_root(&g), &[], &mut seed.child(0).rng(), &opts)?;
            let conditioned = sample_conditioned(&q, &a, &mut seed.child(1).rng())?;
            let inner_is_a = window_key(&free, &g, &inner) == a_key;
            Ok(windows
                .iter()
                .map(|(radius, window)| {
                    StatsRecord::new(NAME, j, seed)
                        .with("inner_radius", section.inner_radius)
                        .with("radius", *radius)
                        .with("window_edges", window.len())
                        .with("a_key", hex(a_key))
                        .with("a_selected", a_count)
                        .with("selection_samples", section.selection_samples)
                        .with("inner_is_a", inner_is_a)
                        .with("uncond_key", hex(window_key(&free, &g, window)))
                        .with("cond_key", hex(window_key(&conditioned, &g, window)))
                })
                .collect())
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailPoint {
    pub radius: usize,
    pub tv: TvEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailSummary {
    pub points: Vec<TailPoint>,
    /// Frequency of `A` on the inner ball of the unconditional samples.
    pub a_frequency: Proportion,
    /// `A` was seen too rarely for the comparison to mean much.
    pub flagged: bool,
}

impl TailSummary {
    /// Whether TV is nonincreasing in `R` up to `sigmas` combined standard errors.
    pub fn nonincreasing_within(&self, sigmas: f64) -> bool {
        self.points.windows(2).all(|w| {
            let se = crate::stats::combined_se(w[0].tv.se, w[1].tv.se);
            w[1].tv.estimate <= w[0].tv.estimate + sigmas * se
        })
    }
}

fn parse_key(s: Option<&str>) -> Result<u64, ExperimentError> {
    s.and_then(|s| u64::from_str_radix(s, 16).ok())
        .ok_or_else(|| ExperimentError::Invariant("tail row without a valid key".into()))
}

pub fn summarize_tail(records: &[StatsRecord]) -> Result<TailSummary, ExperimentError> {
    let mut by_radius: BTreeMap<usize, (Vec<u64>, Vec<u64>)> = BTreeMap::new();
    let mut inner: BTreeMap<u64, bool> = BTreeMap::new();
    let mut selected = 0;
    for r in records {
        let radius = int_at(r, "radius").ok_or_else(|| ExperimentError::Invariant("tail row without radius".into()))?;
        let entry = by_radius.entry(radius as usize).or_default();
        entry.0.push(parse_key(text_at(r, "uncond_key"))?);
        entry.1.push(parse_key(text_at(r, "cond_key"))?);
        inner.insert(r.replica, flag_at(r, "inner_is_a").unwrap_or(false));
        selected = int_at(r, "a_selected").unwrap_or(0) as u64;
    }
    let points = by_radius
        .into_iter()
        .map(|(radius, (uncond, cond))| {
            Ok(TailPoint {
                radius,
                tv: tv_between(&uncond, &cond, &format!("window at R={radius}"))?,
            })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let a_frequency = Proportion::from_flags(inner.into_values());
    let flagged = selected < MIN_CONFIGURATION_COUNT || a_frequency.successes < MIN_CONFIGURATION_COUNT;
    Ok(TailSummary {
        points,
        a_frequency,
        flagged,
    })
}

impl fmt::Display for TailSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "R TV se bins replicas")?;
        for p in &self.points {
            writeln!(f, "{} {:.4} {:.4} {} {}", p.radius, p.tv.estimate, p.tv.se, p.tv.bins, p.tv.n_a)?;
        }
        writeln!(
            f,
            "P(A) on the inner ball: {:.4} (se {:.4})",
            self.a_frequency.estimate().unwrap_or(f64::NAN),
            self.a_frequency.se().unwrap_or(f64::NAN)
        )?;
        if self.flagged {
            writeln!(f, "warning: inner configuration seen fewer than {MIN_CONFIGURATION_COUNT} times")?;
        }
        writeln!(f, "TV nonincreasing within 2 se: {}", self.nonincreasing_within(2.0))
    }
}
