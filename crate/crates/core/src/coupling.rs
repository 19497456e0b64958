//! Coupled forests built from shared walks, the events comparing them, and
//! conditioning on a ball through contraction and deletion.
//!
//! On a graph with a sink (a wired box) the sink plays the role of infinity:
//! it is never inside a ball, every forest is rooted there, and components
//! are read off after detaching it. A walk that reaches the sink by the time
//! it is observed has escaped, and the observation is voided.

use std::collections::{BTreeMap, HashSet};
use std::hash::{Hash, Hasher};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::forest::{components, distinct_components, ComponentLabeling, f_sub_r, future, PropertyError, PropertyEvaluator};
use crate::graph::{contract_and_delete, DisjointSets, EdgeId, Graph, GraphError, Quotient, VertexId};
use crate::rng::RngSeed;
use crate::stats::Proportion;
use crate::walks::{draw_lazy_walk, hitting_time, run_until_after, WalkPath};
use crate::wilson::{
    complete_run_traced, orient_edges, sample_gm, wilson_ust, FreshWalks, OrientedForest, PartialForest,
    RunOutcome, SampleError,
};

#[derive(Debug, Error, PartialEq)]
pub enum CouplingError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error("conditioned edge {0} does not lie inside the ball")]
    NotInBall(EdgeId),
    #[error("conditioned edge set contains a cycle")]
    CyclicCondition,
    #[error("contraction and deletion disconnected the graph")]
    Disconnected,
    #[error("empty sample set")]
    EmptySamples,
}

/// The sink if there is one, otherwise vertex 0.
pub fn default_root(g: &Graph) -> VertexId {
    g.sink().unwrap_or(0)
}

/// The forest with the sink detached, whose components are the ones that matter.
pub fn component_view(f: &OrientedForest, g: &Graph) -> OrientedForest {
    match g.sink() {
        Some(s) => f.detach(s),
        None => f.clone(),
    }
}

/// Lazy walks from `starts`, each run to at least time `horizon` and then on
/// until it stands on a vertex of `roots`, so that any forest containing the
/// roots is hit from every time up to `horizon`. Walk `i` uses `seed.child(i)`.
pub fn draw_coupling_walks(
    g: &Graph,
    starts: &[VertexId],
    horizon: usize,
    roots: &[bool],
    seed: RngSeed,
    cap: usize,
) -> Result<Vec<WalkPath>, SampleError> {
    starts
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            g.check_vertex(u)?;
            let mut rng = seed.child(i as u64).rng();
            let walk = run_until_after(g, u, horizon, |v| roots[v], &mut rng, cap.max(horizon + 1))?;
            if walk.is_truncated() {
                Err(SampleError::PredrawnExhausted { index: i })
            } else {
                Ok(walk)
            }
        })
        .collect()
}

/// Whether some walk stood on the sink at a time `<= m`.
pub fn escaped_by(g: &Graph, walks: &[WalkPath], m: usize) -> bool {
    match g.sink() {
        Some(s) => walks.iter().any(|w| hitting_time(w, |v| v == s, 0).is_some_and(|t| t <= m)),
        None => false,
    }
}

fn positions_at(walks: &[WalkPath], m: usize) -> Result<Vec<VertexId>, SampleError> {
    walks
        .iter()
        .enumerate()
        .map(|(index, w)| w.at_time(m).ok_or(SampleError::PredrawnExhausted { index }))
        .collect()
}

fn shifted_walks(walks: &[WalkPath], m: usize) -> Result<Vec<WalkPath>, SampleError> {
    walks
        .iter()
        .enumerate()
        .map(|(index, w)| w.shifted(m).ok_or(SampleError::PredrawnExhausted { index }))
        .collect()
}

/// `F_R` together with the roots of `f`, the starting point of an interpolating run.
pub fn initial_partial(f: &OrientedForest, g: &Graph, u1: VertexId, radius: usize) -> PartialForest {
    f_sub_r(f, g, u1, radius).with_roots(&f.roots())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FmrOutcome {
    /// `F_R` plus the roots of `F`.
    pub initial: PartialForest,
    pub run: RunOutcome,
    /// The walk positions at time `m`.
    pub starts: Vec<VertexId>,
}

/// The interpolating forest: the run completed from `F_R`, led by the walks
/// observed from time `m`, then fresh walks in id order.
#[allow(clippy::too_many_arguments)]
pub fn build_fmr<R: Rng + ?Sized>(
    g: &Graph,
    f: &OrientedForest,
    walks: &[WalkPath],
    m: usize,
    radius: usize,
    u1: VertexId,
    fresh: &mut FreshWalks<'_, R>,
    cap: Option<usize>,
) -> Result<FmrOutcome, SampleError> {
    let initial = initial_partial(f, g, u1, radius);
    let shifted = shifted_walks(walks, m)?;
    let starts: Vec<VertexId> = shifted.iter().map(WalkPath::first).collect();
    let run = complete_run_traced(g, &initial, &starts, &shifted, fresh, cap)?;
    Ok(FmrOutcome { initial, run, starts })
}

/// `F_R` avoids every ball `B(u_i, r)`.
pub fn event_c(f_r: &PartialForest, g: &Graph, u: &[VertexId], r: usize) -> bool {
    u.iter()
        .all(|&ui| g.ball(ui, r).into_iter().all(|v| !f_r.contains(v)))
}

/// Each leading walk first hit the growing forest at a vertex of the initial
/// partial forest, and no two walks start at the same vertex (a shared start
/// is never in two different components).
pub fn event_b(out: &FmrOutcome) -> bool {
    let distinct = out.starts.iter().enumerate().all(|(i, x)| !out.starts[i + 1..].contains(x));
    distinct && out.run.first_hits.iter().all(|h| h.in_initial)
}

/// The starts lie in distinct components of the completed forest once the
/// initial partial forest's vertices are deleted. A start inside the initial
/// forest counts as its own singleton.
pub fn event_b_components(out: &FmrOutcome) -> bool {
    let n = out.initial.support().len();
    let mut sets = DisjointSets::new(n);
    for v in 0..n {
        if let Some(p) = out.run.forest.parent_vertex(v) {
            if !out.initial.contains(v) && !out.initial.contains(p) {
                sets.union(v, p);
            }
        }
    }
    let mut seen = HashSet::new();
    out.starts.iter().all(|&x| {
        let key = if out.initial.contains(x) { (x, true) } else { (sets.find(x), false) };
        seen.insert(key)
    })
}

/// The vertices `xs` are in distinct components of `gm` viewed without the sink.
pub fn event_w(gm: &OrientedForest, g: &Graph, xs: &[VertexId]) -> bool {
    distinct_components(&component_view(gm, g), xs)
}

/// Every future in `f` of a vertex of `xs` avoids `B(u1, radius)`.
pub fn event_d(g: &Graph, f: &OrientedForest, xs: &[VertexId], u1: VertexId, radius: usize) -> bool {
    let ball = g.ball_mask(u1, radius);
    xs.iter().all(|&x| future(f, x).into_iter().all(|v| !ball[v]))
}

/// First times at or after `m` that each walk hits `F_R`.
pub fn hitting_times(walks: &[WalkPath], f_r: &PartialForest, m: usize) -> Vec<Option<usize>> {
    walks
        .iter()
        .map(|w| hitting_time(w, |v| f_r.contains(v), m))
        .collect()
}

/// The two forests use the same edges inside `B(center, radius)`.
pub fn coincide_on_ball(a: &OrientedForest, b: &OrientedForest, g: &Graph, center: VertexId, radius: usize) -> bool {
    g.edges_within(&g.ball_mask(center, radius))
        .into_iter()
        .all(|e| forest_has_edge(a, g, e) == forest_has_edge(b, g, e))
}

pub fn forest_has_edge(f: &OrientedForest, g: &Graph, e: EdgeId) -> bool {
    let (a, b) = g.endpoints(e);
    f.parent(a) == Some((b, e)) || f.parent(b) == Some((a, e))
}

/// One point of a coupling sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingPoint {
    pub m: usize,
    pub radius: usize,
    pub fmr: FmrOutcome,
    pub w: bool,
    pub b: bool,
    pub b_components: bool,
    pub d: bool,
    pub taus: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingSample {
    pub forest: OrientedForest,
    pub walks: Vec<WalkPath>,
    /// `G_m` for each `m`, in ladder order.
    pub gm: Vec<(usize, RunOutcome)>,
    /// One point per `(m, radius)`, `m` major.
    pub points: Vec<CouplingPoint>,
}

/// Streams of a coupling replica: the forest, the walks, and the fresh walks
/// used at each `m` (shared by `G_m` and every `F_{m,R}`).
pub struct CouplingSeeds {
    pub forest: RngSeed,
    pub walks: RngSeed,
    fresh: RngSeed,
}

impl CouplingSeeds {
    pub fn new(replica: RngSeed) -> Self {
        CouplingSeeds {
            forest: replica.child(0),
            walks: replica.child(1),
            fresh: replica.child(2),
        }
    }

    pub fn fresh(&self, m: usize) -> RngSeed {
        self.fresh.child(m as u64)
    }
}

/// Draws `F`, walks from `u`, and for every `m` in `ms` the forest `G_m` and
/// the interpolating forests for every radius. `Ok(None)` when a walk escaped
/// by the largest `m`.
pub fn coupling_sample(
    g: &Graph,
    u: &[VertexId],
    ms: &[usize],
    radii: &[usize],
    seed: RngSeed,
    cap: Option<usize>,
) -> Result<Option<CouplingSample>, SampleError> {
    let seeds = CouplingSeeds::new(seed);
    let root = default_root(g);
    let forest = wilson_ust(g, root, &[], &mut seeds.forest.rng())?;
    let max_m = ms.iter().copied().max().unwrap_or(0);
    let mut roots = vec![false; g.vertex_count()];
    roots[root] = true;
    let walk_cap = cap.unwrap_or(crate::wilson::DEFAULT_CAP_FACTOR * g.vertex_count());
    let walks = draw_coupling_walks(g, u, max_m, &roots, seeds.walks, walk_cap)?;
    if escaped_by(g, &walks, max_m) {
        return Ok(None);
    }
    let mut gm = Vec::with_capacity(ms.len());
    let mut points = Vec::with_capacity(ms.len() * radii.len());
    for &m in ms {
        let shifted = shifted_walks(&walks, m)?;
        let g_m = sample_gm(g, root, &shifted, &mut FreshWalks::keyed(seeds.fresh(m)), cap)?;
        let xs = positions_at(&walks, m)?;
        let w = event_w(&g_m.forest, g, &xs);
        for &radius in radii {
            let fmr = build_fmr(g, &forest, &walks, m, radius, u[0], &mut FreshWalks::keyed(seeds.fresh(m)), cap)?;
            let b = event_b(&fmr);
            let b_components = event_b_components(&fmr);
            let d = event_d(g, &forest, &xs, u[0], radius);
            let taus = hitting_times(&walks, &fmr.initial, m);
            points.push(CouplingPoint {
                m,
                radius,
                fmr,
                w,
                b,
                b_components,
                d,
                taus,
            });
        }
        gm.push((m, g_m));
    }
    Ok(Some(CouplingSample {
        forest,
        walks,
        gm,
        points,
    }))
}

/// The graph in which a uniform spanning tree, together with `a`, has the
/// law of the uniform spanning tree of `g` conditioned to use exactly the
/// edges `a` among those with both endpoints in `B(u1, r)`.
pub fn condition_on_ball<'g>(g: &'g Graph, u1: VertexId, r: usize, a: &[EdgeId]) -> Result<Quotient<'g>, CouplingError> {
    g.check_vertex(u1)?;
    let inside = g.edges_within(&g.ball_mask(u1, r));
    let mut in_a = vec![false; g.edge_count()];
    for &e in a {
        g.check_edge(e)?;
        if inside.binary_search(&e).is_err() {
            return Err(CouplingError::NotInBall(e));
        }
        in_a[e] = true;
    }
    let mut sets = DisjointSets::new(g.vertex_count());
    for &e in a {
        let (x, y) = g.endpoints(e);
        if !sets.union(x, y) {
            return Err(CouplingError::CyclicCondition);
        }
    }
    let delete: Vec<EdgeId> = inside.into_iter().filter(|&e| !in_a[e]).collect();
    Ok(contract_and_delete(g, a, &delete)?)
}

/// A conditioned sample: the uniform spanning tree of the quotient, lifted
/// back to base edges, plus `a`, oriented toward the base root.
pub fn sample_conditioned<R: Rng + ?Sized>(
    q: &Quotient<'_>,
    a: &[EdgeId],
    rng: &mut R,
) -> Result<OrientedForest, CouplingError> {
    if q.is_disconnected() {
        return Err(CouplingError::Disconnected);
    }
    let base = q.base();
    let root = default_root(base);
    let tree = wilson_ust(q.derived(), q.project(root), &[], rng)?;
    let mut edges: Vec<EdgeId> = tree.edge_set().into_iter().map(|e| q.base_edge(e)).collect();
    edges.extend_from_slice(a);
    orient_edges(base, &edges, &[root]).map_err(|e| CouplingError::Sample(e.into()))
}

/// One replica of the two-arm comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalReplica {
    /// `u` in distinct components.
    pub w: bool,
    /// The property at `u`.
    pub holds: bool,
    /// The property at the walk positions for each `m`; `None` if voided.
    pub at_walks: Vec<Option<bool>>,
}

/// Samples `F` and walks from `u`, evaluating the property at `u` and at the
/// walk positions `X_m` for each `m` in the ladder.
pub fn conditional_replica(
    eval: &PropertyEvaluator<'_>,
    g: &Graph,
    u: &[VertexId],
    ms: &[usize],
    seed: RngSeed,
) -> Result<ConditionalReplica, CouplingError> {
    let seeds = CouplingSeeds::new(seed);
    let forest = wilson_ust(g, default_root(g), &[], &mut seeds.forest.rng())?;
    let labels = components(&component_view(&forest, g));
    let w = labels.all_distinct(u);
    let holds = eval.eval(&labels, u)?.holds;
    let at_walks = walk_arm(eval, g, &labels, u, ms, seeds.walks)?;
    Ok(ConditionalReplica { w, holds, at_walks })
}

/// The property at the positions `X_m` of lazy walks from `u` (walk `i` on
/// `seed.child(i)`), for each `m`; `None` where a walk escaped by time `m`.
pub fn walk_arm(
    eval: &PropertyEvaluator<'_>,
    g: &Graph,
    labels: &ComponentLabeling,
    u: &[VertexId],
    ms: &[usize],
    seed: RngSeed,
) -> Result<Vec<Option<bool>>, CouplingError> {
    let max_m = ms.iter().copied().max().unwrap_or(0);
    let walks: Vec<WalkPath> = u
        .iter()
        .enumerate()
        .map(|(i, &ui)| draw_lazy_walk(g, ui, max_m, &mut seed.child(i as u64).rng()))
        .collect::<Result<_, _>>()
        .map_err(SampleError::from)?;
    ms.iter()
        .map(|&m| {
            if escaped_by(g, &walks, m) {
                return Ok(None);
            }
            let xs = positions_at(&walks, m)?;
            Ok(Some(eval.eval(labels, &xs)?.holds))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderPoint {
    pub m: usize,
    /// The property at `X_m`, over replicas not voided at `m`.
    pub at_walks: Proportion,
    /// The property at `u` given `W(u)`, over the same replicas.
    pub given_w: Proportion,
    pub voided: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalEstimate {
    /// The property at `u` given `W(u)`, over all replicas; no trials if
    /// `W(u)` never occurred.
    pub given_w: Proportion,
    pub w: Proportion,
    pub ladder: Vec<LadderPoint>,
}

/// Aggregates replicas. A replica voided at `m` is dropped from both arms at `m`.
pub fn summarize_conditional(replicas: &[ConditionalReplica], ms: &[usize]) -> ConditionalEstimate {
    let mut given_w = Proportion::default();
    let mut w = Proportion::default();
    for r in replicas {
        w.push(r.w);
        if r.w {
            given_w.push(r.holds);
        }
    }
    let ladder = ms
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let mut point = LadderPoint {
                m,
                at_walks: Proportion::default(),
                given_w: Proportion::default(),
                voided: 0,
            };
            for r in replicas {
                match r.at_walks[i] {
                    None => point.voided += 1,
                    Some(h) => {
                        point.at_walks.push(h);
                        if r.w {
                            point.given_w.push(r.holds);
                        }
                    }
                }
            }
            point
        })
        .collect();
    ConditionalEstimate { given_w, w, ladder }
}

/// Both sides of the walk-limit identity over `n` replicas `RngSeed::new(master, j)`.
pub fn estimate_conditional(
    eval: &PropertyEvaluator<'_>,
    g: &Graph,
    u: &[VertexId],
    ms: &[usize],
    n: u64,
    master: u64,
) -> Result<ConditionalEstimate, CouplingError> {
    if n == 0 {
        return Err(CouplingError::EmptySamples);
    }
    let replicas: Vec<ConditionalReplica> = (0..n)
        .into_par_iter()
        .map(|j| conditional_replica(eval, g, u, ms, RngSeed::new(master, j)))
        .collect::<Result<_, _>>()?;
    Ok(summarize_conditional(&replicas, ms))
}

/// Key of the forest's configuration on `window` (sorted edge ids): a bit
/// mask for up to 64 edges, a hash beyond that.
pub fn window_key(f: &OrientedForest, g: &Graph, window: &[EdgeId]) -> u64 {
    if window.len() <= 64 {
        window
            .iter()
            .enumerate()
            .filter(|&(_, &e)| forest_has_edge(f, g, e))
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    } else {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for &e in window {
            forest_has_edge(f, g, e).hash(&mut h);
        }
        h.finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TvEstimate {
    pub estimate: f64,
    /// Delta-method standard error; zero when the histograms coincide.
    pub se: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub bins: usize,
    pub descriptor: String,
}

/// Half the L1 distance between the empirical histograms of two samples.
pub fn tv_between(a: &[u64], b: &[u64], descriptor: &str) -> Result<TvEstimate, CouplingError> {
    if a.is_empty() || b.is_empty() {
        return Err(CouplingError::EmptySamples);
    }
    let mut hist: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for &k in a {
        hist.entry(k).or_default().0 += 1;
    }
    for &k in b {
        hist.entry(k).or_default().1 += 1;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut l1 = 0.0;
    let (mut sa, mut sb) = (0.0, 0.0);
    for &(ca, cb) in hist.values() {
        let (p, q) = (ca as f64 / na, cb as f64 / nb);
        l1 += (p - q).abs();
        let s = (p - q).signum();
        sa += s * p;
        sb += s * q;
    }
    let var = 0.25 * ((1.0 - sa * sa) / na + (1.0 - sb * sb) / nb);
    let estimate = (0.5 * l1).clamp(0.0, 1.0);
    let se = if estimate == 0.0 { 0.0 } else { var.max(0.0).sqrt() };
    Ok(TvEstimate {
        estimate,
        se,
        n_a: a.len(),
        n_b: b.len(),
        bins: hist.len(),
        descriptor: descriptor.to_string(),
    })
}
