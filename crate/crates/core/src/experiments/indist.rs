//! Indistinguishability: the conditional probability of a component
//! property given that the root tuple lies in distinct components, across
//! tuples, and its walk-limit counterpart for one lead tuple.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use super::{flag_at, int_at, text_at, vertex_at, ExperimentConfig, ExperimentError, StatsRecord};
use crate::coupling::{component_view, default_root, summarize_conditional, walk_arm, ConditionalReplica, CouplingSeeds, LadderPoint};
use crate::forest::{components, PropertyEvaluator};
use crate::graph::{make_box, VertexId};
use crate::rng::RngSeed;
use crate::stats::{combined_se, Proportion};
use crate::wilson::{wilson_ust_with, WilsonOptions};

const NAME: &str = "indistinguishability";

/// Rows per replica: one `given-w` row per tuple (`w`, and the property at
/// the tuple), then one `walk` row per ladder entry for the lead tuple (the
/// property at the walk positions, empty when voided). All tuples share the
/// replica's forest.
pub fn run_indistinguishability(cfg: &ExperimentConfig) -> Result<Vec<StatsRecord>, ExperimentError> {
    let spec = cfg.lattice()?;
    let section = cfg.require(&cfg.indistinguishability, "indistinguishability")?;
    let property = cfg.require(&cfg.property, "property")?;
    let g = make_box(spec)?;
    let eval = PropertyEvaluator::new(property.to_spec()?, &g)?;
    let tuples: Vec<Vec<VertexId>> = section
        .tuples
        .iter()
        .map(|t| t.iter().map(|x| vertex_at(spec, x)).collect())
        .collect::<Result<_, _>>()?;
    if tuples.is_empty() {
        return Err(super::ConfigError::Invalid("no tuples given".into()).into());
    }
    if section.lead_tuple >= tuples.len() {
        return Err(super::ConfigError::Invalid(format!(
            "lead_tuple {} out of range for {} tuples",
            section.lead_tuple,
            tuples.len()
        ))
        .into());
    }
    let opts = WilsonOptions {
        cap: Some(cfg.limits.cap_factor.saturating_mul(g.vertex_count())),
        ..WilsonOptions::default()
    };
    let ms = &section.m_ladder;
    let lead = section.lead_tuple;
    let rows: Vec<Vec<StatsRecord>> = cfg
        .replica_range()
        .into_par_iter()
        .map(|j| {
            let seed = RngSeed::new(cfg.seeds.master, j);
            let seeds = CouplingSeeds::new(seed);
            let f = wilson_ust_with(&g, default_root(&g), &[], &mut seeds.forest.rng(), &opts)?;
            let labels = components(&component_view(&f, &g));
            let row = |tuple: usize, arm: &str, m: Option<usize>, w: bool, holds: Option<bool>| {
                StatsRecord::new(NAME, j, seed)
                    .with("tuple", tuple)
                    .with("arm", arm)
                    .with("m", m)
                    .with("w", w)
                    .with("holds", holds)
                    .with("voided", holds.is_none())
            };
            let mut out = Vec::with_capacity(tuples.len() + ms.len());
            let mut lead_w = false;
            for (t, u) in tuples.iter().enumerate() {
                let w = labels.all_distinct(u);
                let holds = eval.eval(&labels, u)?.holds;
                if t == lead {
                    lead_w = w;
                }
                out.push(row(t, "given-w", None, w, Some(holds)));
            }
            let at_walks = walk_arm(&eval, &g, &labels, &tuples[lead], ms, seeds.walks)?;
            for (&m, h) in ms.iter().zip(at_walks) {
                out.push(row(lead, "walk", Some(m), lead_w, h));
            }
            Ok(out)
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TupleEstimate {
    pub tuple: usize,
    /// The property given `W`.
    pub given_w: Proportion,
    pub w: Proportion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseGap {
    pub a: usize,
    pub b: usize,
    pub gap: f64,
    pub se: f64,
}

impl PairwiseGap {
    /// Gap in combined standard errors; infinite for a gap with no spread.
    pub fn z(&self) -> f64 {
        if self.se > 0.0 {
            self.gap / self.se
        } else if self.gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndistSummary {
    pub tuples: Vec<TupleEstimate>,
    /// The pair of tuples with the largest standardized gap.
    pub worst_pair: Option<PairwiseGap>,
    /// Both verdicts occur among samples with `W`.
    pub nonconstant: bool,
    /// Tuples for which `W` never occurred.
    pub without_w: Vec<usize>,
    pub lead: Option<usize>,
    pub ladder: Vec<LadderPoint>,
}

pub fn summarize_indistinguishability(records: &[StatsRecord]) -> Result<IndistSummary, ExperimentError> {
    let mut tuples: BTreeMap<usize, TupleEstimate> = BTreeMap::new();
    let mut lead = None;
    // replica -> (w, holds at the lead tuple, at-walk verdicts by m)
    type LeadRow = (bool, bool, BTreeMap<usize, Option<bool>>);
    let mut lead_rows: BTreeMap<u64, LeadRow> = BTreeMap::new();
    let mut seen = [false; 2];
    for r in records {
        let (Some(t), Some(arm), Some(w)) = (int_at(r, "tuple"), text_at(r, "arm"), flag_at(r, "w")) else {
            return Err(ExperimentError::Invariant("indistinguishability row without tuple, arm or w".into()));
        };
        let t = t as usize;
        let holds = flag_at(r, "holds");
        match arm {
            "given-w" => {
                let e = tuples.entry(t).or_insert_with(|| TupleEstimate {
                    tuple: t,
                    given_w: Proportion::default(),
                    w: Proportion::default(),
                });
                e.w.push(w);
                if w {
                    let h = holds.unwrap_or(false);
                    e.given_w.push(h);
                    seen[usize::from(h)] = true;
                }
            }
            "walk" => {
                lead = Some(t);
                let m = int_at(r, "m").unwrap_or(0) as usize;
                lead_rows.entry(r.replica).or_default().2.insert(m, holds);
            }
            other => return Err(ExperimentError::Invariant(format!("unknown arm {other}"))),
        }
    }
    // The lead is only known once a walk row is seen.
    if let Some(l) = lead {
        for r in records {
            if int_at(r, "tuple") == Some(l as i64) && text_at(r, "arm") == Some("given-w") {
                let entry = lead_rows.entry(r.replica).or_default();
                entry.0 = flag_at(r, "w").unwrap_or(false);
                entry.1 = flag_at(r, "holds").unwrap_or(false);
            }
        }
    }
    let tuples: Vec<TupleEstimate> = tuples.into_values().collect();
    let mut worst_pair: Option<PairwiseGap> = None;
    for (i, a) in tuples.iter().enumerate() {
        for b in &tuples[i + 1..] {
            let (Some(pa), Some(pb)) = (a.given_w.estimate(), b.given_w.estimate()) else {
                continue;
            };
            let gap = PairwiseGap {
                a: a.tuple,
                b: b.tuple,
                gap: (pa - pb).abs(),
                se: combined_se(a.given_w.se().unwrap_or(0.0), b.given_w.se().unwrap_or(0.0)),
            };
            if worst_pair.as_ref().is_none_or(|w| gap.z() > w.z()) {
                worst_pair = Some(gap);
            }
        }
    }
    let without_w = tuples
        .iter()
        .filter(|t| t.given_w.trials == 0)
        .map(|t| t.tuple)
        .collect();
    let ladder = match lead_rows.values().next() {
        Some((_, _, first)) => {
            let ms: Vec<usize> = first.keys().copied().collect();
            let replicas: Vec<ConditionalReplica> = lead_rows
                .values()
                .map(|(w, holds, at)| ConditionalReplica {
                    w: *w,
                    holds: *holds,
                    at_walks: ms.iter().map(|m| at.get(m).copied().flatten()).collect(),
                })
                .collect();
            summarize_conditional(&replicas, &ms).ladder
        }
        None => Vec::new(),
    };
    Ok(IndistSummary {
        tuples,
        worst_pair,
        nonconstant: seen[0] && seen[1],
        without_w,
        lead,
        ladder,
    })
}

impl IndistSummary {
    /// The walk-limit gap at the largest `m`, in combined standard errors.
    pub fn ladder_gap(&self) -> Option<PairwiseGap> {
        let p = self.ladder.iter().max_by_key(|p| p.m)?;
        let (a, b) = (p.given_w.estimate()?, p.at_walks.estimate()?);
        Some(PairwiseGap {
            a: p.m,
            b: p.m,
            gap: (a - b).abs(),
            se: combined_se(p.given_w.se()?, p.at_walks.se()?),
        })
    }
}

impl fmt::Display for IndistSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tuple replicas P(W) P(A|W) se")?;
        for t in &self.tuples {
            writeln!(
                f,
                "{} {} {:.4} {:.4} {:.4}",
                t.tuple,
                t.w.trials,
                t.w.estimate().unwrap_or(f64::NAN),
                t.given_w.estimate().unwrap_or(f64::NAN),
                t.given_w.se().unwrap_or(f64::NAN)
            )?;
        }
        if let Some(p) = &self.worst_pair {
            writeln!(
                f,
                "largest pairwise gap: tuples {} and {}, {:.4} (se {:.4}, z {:.2})",
                p.a,
                p.b,
                p.gap,
                p.se,
                p.z()
            )?;
        }
        writeln!(f, "verdicts nonconstant: {}", self.nonconstant)?;
        for t in &self.without_w {
            writeln!(f, "warning: W never occurred for tuple {t}")?;
        }
        if let Some(lead) = self.lead {
            writeln!(f, "walk ladder for tuple {lead}: m P(A at X_m) se P(A|W) se voided")?;
            for p in &self.ladder {
                writeln!(
                    f,
                    "{} {:.4} {:.4} {:.4} {:.4} {}",
                    p.m,
                    p.at_walks.estimate().unwrap_or(f64::NAN),
                    p.at_walks.se().unwrap_or(f64::NAN),
                    p.given_w.estimate().unwrap_or(f64::NAN),
                    p.given_w.se().unwrap_or(f64::NAN),
                    p.voided
                )?;
            }
        }
        Ok(())
    }
}
