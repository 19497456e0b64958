//! Wilson's algorithm: uniform spanning trees, wired forests on boxes, and
//! completion of a run from an arbitrary partial forest.

use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::graph::{make_box, Boundary, BoxSpec, EdgeId, Graph, GraphError, VertexId};
use crate::rng::{RngSeed, WalkRng};
use crate::walks::{lazy_move, simple_move, LoopErasedPath, LoopEraser, WalkError, WalkPath};

/// Default per-walk step cap as a multiple of the vertex count.
pub const DEFAULT_CAP_FACTOR: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("forest has {forest} vertices but the graph has {graph}")]
    SizeMismatch { forest: usize, graph: usize },
    #[error("parent pointers starting at vertex {0} form a cycle")]
    Cycle(VertexId),
    #[error("vertex {0} points to its parent along an edge that does not join them")]
    BadEdge(VertexId),
    #[error("vertex {0} of the partial forest points outside the support")]
    OpenSupport(VertexId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("walk from vertex {start} did not hit the forest within {cap} steps")]
    WalkCapExhausted { start: VertexId, cap: usize },
    #[error("pre-drawn walk {index} ended before hitting the forest")]
    PredrawnExhausted { index: usize },
    #[error("pre-drawn walk {index} starts at {found}, expected {expected}")]
    StartMismatch {
        index: usize,
        expected: VertexId,
        found: VertexId,
    },
    #[error("box boundary must be wired, got {0}")]
    NotWired(Boundary),
    #[error("partial forest is empty; nothing for walks to hit")]
    EmptyPartial,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Parent pointers over all vertices of a graph; roots have no parent.
/// Orientation runs from each vertex toward its root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrientedForest {
    parent: Vec<Option<(VertexId, EdgeId)>>,
}

impl OrientedForest {
    /// Every vertex a root.
    pub fn roots_only(n: usize) -> Self {
        OrientedForest { parent: vec![None; n] }
    }

    pub fn from_parents(parent: Vec<Option<(VertexId, EdgeId)>>) -> Self {
        OrientedForest { parent }
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: VertexId) -> Option<(VertexId, EdgeId)> {
        self.parent[v]
    }

    pub fn parent_vertex(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v].map(|(p, _)| p)
    }

    pub fn parents(&self) -> &[Option<(VertexId, EdgeId)>] {
        &self.parent
    }

    pub fn is_root(&self, v: VertexId) -> bool {
        self.parent[v].is_none()
    }

    pub fn roots(&self) -> Vec<VertexId> {
        (0..self.parent.len()).filter(|&v| self.is_root(v)).collect()
    }

    pub fn root_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_none()).count()
    }

    pub fn root_of(&self, mut v: VertexId) -> VertexId {
        while let Some((p, _)) = self.parent[v] {
            v = p;
        }
        v
    }

    /// The forest's edge ids, sorted. Identifies the unoriented forest.
    pub fn edge_set(&self) -> Vec<EdgeId> {
        let mut edges: Vec<EdgeId> = self.parent.iter().flatten().map(|&(_, e)| e).collect();
        edges.sort_unstable();
        edges
    }

    /// Detaches `root`: its children become roots. Vertex ids are unchanged.
    pub fn detach(&self, root: VertexId) -> OrientedForest {
        let mut parent = self.parent.clone();
        parent[root] = None;
        for p in parent.iter_mut() {
            if matches!(p, Some((q, _)) if *q == root) {
                *p = None;
            }
        }
        OrientedForest { parent }
    }

    /// Drops vertices `n..`; they must not be parents of vertices below `n`.
    pub fn restricted_to_prefix(&self, n: usize) -> OrientedForest {
        let parent = self.parent[..n]
            .iter()
            .map(|p| p.filter(|&(q, _)| q < n))
            .collect();
        OrientedForest { parent }
    }

    /// Checks edge consistency with `g` and acyclicity.
    pub fn validate(&self, g: &Graph) -> Result<(), ForestError> {
        let n = self.parent.len();
        if n != g.vertex_count() {
            return Err(ForestError::SizeMismatch {
                forest: n,
                graph: g.vertex_count(),
            });
        }
        for (v, p) in self.parent.iter().enumerate() {
            if let Some((q, e)) = *p {
                if e >= g.edge_count() || q == v {
                    return Err(ForestError::BadEdge(v));
                }
                let (a, b) = g.endpoints(e);
                if !((a, b) == (v, q) || (b, a) == (v, q)) {
                    return Err(ForestError::BadEdge(v));
                }
            }
        }
        check_acyclic(&self.parent)
    }
}

/// 0 = unvisited, 1 = on the current chain, 2 = known to reach a root.
fn check_acyclic(parent: &[Option<(VertexId, EdgeId)>]) -> Result<(), ForestError> {
    let mut state = vec![0u8; parent.len()];
    let mut chain = Vec::new();
    for start in 0..parent.len() {
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            chain.push(v);
            match parent[v] {
                Some((p, _)) => v = p,
                None => break,
            }
        }
        if state[v] == 1 && parent[v].is_some() {
            return Err(ForestError::Cycle(start));
        }
        for w in chain.drain(..) {
            state[w] = 2;
        }
    }
    Ok(())
}

/// An oriented forest on a subset of the vertices (its support).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialForest {
    forest: OrientedForest,
    support: Vec<bool>,
}

impl PartialForest {
    pub fn empty(n: usize) -> Self {
        PartialForest {
            forest: OrientedForest::roots_only(n),
            support: vec![false; n],
        }
    }

    /// Isolated roots and nothing else.
    pub fn from_roots(n: usize, roots: &[VertexId]) -> Self {
        let mut p = Self::empty(n);
        for &r in roots {
            p.support[r] = true;
        }
        p
    }

    /// A whole forest as a partial forest.
    pub fn full(f: &OrientedForest) -> Self {
        PartialForest {
            forest: f.clone(),
            support: vec![true; f.vertex_count()],
        }
    }

    /// Restriction of `f` to `support`, which must be closed under taking parents.
    pub fn restrict(f: &OrientedForest, support: Vec<bool>) -> Result<Self, ForestError> {
        let mut parent = vec![None; f.vertex_count()];
        for v in 0..f.vertex_count() {
            if support[v] {
                if let Some((q, e)) = f.parent(v) {
                    if !support[q] {
                        return Err(ForestError::OpenSupport(v));
                    }
                    parent[v] = Some((q, e));
                }
            }
        }
        Ok(PartialForest {
            forest: OrientedForest { parent },
            support,
        })
    }

    pub fn forest(&self) -> &OrientedForest {
        &self.forest
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.support[v]
    }

    pub fn len(&self) -> usize {
        self.support.iter().filter(|&&s| s).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.support.iter().any(|&s| s)
    }

    pub fn vertices(&self) -> Vec<VertexId> {
        crate::graph::mask_to_vertices(&self.support)
    }

    /// Adds `roots` to the support as isolated roots where absent.
    pub fn with_roots(mut self, roots: &[VertexId]) -> Self {
        for &r in roots {
            self.support[r] = true;
        }
        self
    }

    pub fn validate(&self, g: &Graph) -> Result<(), ForestError> {
        for v in 0..self.support.len() {
            match self.forest.parent(v) {
                Some((q, _)) if !self.support[v] || !self.support[q] => {
                    return Err(ForestError::OpenSupport(v))
                }
                _ => {}
            }
        }
        self.forest.validate(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Laziness {
    /// Non-lazy steps; same forest law, fewer draws.
    #[default]
    Simple,
    Lazy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WilsonOptions {
    pub laziness: Laziness,
    /// Per-walk step cap; `None` means `DEFAULT_CAP_FACTOR * n`.
    pub cap: Option<usize>,
}

impl Default for WilsonOptions {
    fn default() -> Self {
        WilsonOptions {
            laziness: Laziness::Simple,
            cap: None,
        }
    }
}

fn default_cap(n: usize) -> usize {
    DEFAULT_CAP_FACTOR.saturating_mul(n.max(1))
}

/// `order`, followed by any vertex it misses, in id order.
fn full_order(order: &[VertexId], n: usize) -> impl Iterator<Item = VertexId> + '_ {
    order.iter().copied().chain(0..n)
}

/// Uniform spanning tree of `g` oriented toward `root`.
pub fn wilson_ust<R: Rng + ?Sized>(
    g: &Graph,
    root: VertexId,
    order: &[VertexId],
    rng: &mut R,
) -> Result<OrientedForest, SampleError> {
    wilson_ust_with(g, root, order, rng, &WilsonOptions::default())
}

/// Wilson's algorithm with last-exit pointers: each walk overwrites the exit
/// pointer of every vertex it leaves, and retracing the pointers from the
/// start yields the loop erasure.
pub fn wilson_ust_with<R: Rng + ?Sized>(
    g: &Graph,
    root: VertexId,
    order: &[VertexId],
    rng: &mut R,
    opts: &WilsonOptions,
) -> Result<OrientedForest, SampleError> {
    let n = g.vertex_count();
    g.check_vertex(root)?;
    for &v in order {
        g.check_vertex(v)?;
    }
    let cap = opts.cap.unwrap_or_else(|| default_cap(n));
    let mut in_tree = vec![false; n];
    let mut next: Vec<(VertexId, EdgeId)> = vec![(usize::MAX, usize::MAX); n];
    let mut parent = vec![None; n];
    in_tree[root] = true;
    for start in full_order(order, n) {
        let mut u = start;
        let mut steps = 0usize;
        while !in_tree[u] {
            if steps == cap {
                return Err(SampleError::WalkCapExhausted { start, cap });
            }
            steps += 1;
            match opts.laziness {
                Laziness::Simple => {
                    let (w, e) = simple_move(g, u, rng)?;
                    next[u] = (w, e);
                    u = w;
                }
                Laziness::Lazy => {
                    if let (w, Some(e)) = lazy_move(g, u, rng)? {
                        next[u] = (w, e);
                        u = w;
                    }
                }
            }
        }
        let mut u = start;
        while !in_tree[u] {
            parent[u] = Some(next[u]);
            in_tree[u] = true;
            u = next[u].0;
        }
    }
    let forest = OrientedForest { parent };
    debug_assert_eq!(forest.validate(g), Ok(()));
    Ok(forest)
}

/// A forest on the `L^d` sites of a wired box: the uniform spanning tree of
/// the wired graph rooted at the boundary vertex, with that vertex removed.
pub fn sample_wired_usf<R: Rng + ?Sized>(spec: &BoxSpec, rng: &mut R) -> Result<OrientedForest, SampleError> {
    if spec.boundary != Boundary::Wired {
        return Err(SampleError::NotWired(spec.boundary));
    }
    let g = make_box(spec)?;
    let full = sample_wired_usf_on(&g, rng)?;
    Ok(full.restricted_to_prefix(spec.site_count()))
}

/// Uniform spanning tree of a graph with a sink, rooted at the sink. The
/// result still contains the sink; see [`OrientedForest::detach`].
pub fn sample_wired_usf_on<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<OrientedForest, SampleError> {
    let sink = g.sink().ok_or(SampleError::NotWired(Boundary::Free))?;
    wilson_ust(g, sink, &[], rng)
}

/// Source of the walks started from vertices without a pre-drawn walk.
pub enum FreshWalks<'a, R: Rng + ?Sized> {
    /// All fresh walks consume one shared stream, in order.
    Shared(&'a mut R),
    /// The walk from vertex `v` uses stream `seed.child(v)`, so two runs with
    /// the same seed reuse the same walk from each vertex.
    Keyed(RngSeed),
}

impl FreshWalks<'static, WalkRng> {
    pub fn keyed(seed: RngSeed) -> Self {
        FreshWalks::Keyed(seed)
    }
}

/// Where a pre-drawn walk first met the forest being built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FirstHit {
    pub vertex: VertexId,
    /// Steps taken along the walk before the hit.
    pub steps: usize,
    /// Whether the hit vertex belonged to the initial partial forest.
    pub in_initial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub forest: OrientedForest,
    /// One entry per pre-drawn walk, in order.
    pub first_hits: Vec<FirstHit>,
}

fn edge_between(g: &Graph, a: VertexId, b: VertexId) -> Option<EdgeId> {
    g.neighbors(a).iter().find(|&&(w, _)| w == b).map(|&(_, e)| e)
}

struct Grower<'g> {
    g: &'g Graph,
    in_tree: Vec<bool>,
    parent: Vec<Option<(VertexId, EdgeId)>>,
    eraser: LoopEraser,
    erased: LoopErasedPath,
}

impl Grower<'_> {
    fn adjoin(&mut self, vertices: &[VertexId], steps: &[Option<EdgeId>]) {
        self.eraser.erase(vertices, steps, &mut self.erased);
        let path = &self.erased;
        for k in 0..path.vertices.len() - 1 {
            let (a, b) = (path.vertices[k], path.vertices[k + 1]);
            let e = path.edges[k]
                .or_else(|| edge_between(self.g, a, b))
                .expect("consecutive walk vertices are adjacent");
            self.parent[a] = Some((b, e));
            self.in_tree[a] = true;
        }
    }

    /// Lazy walk from `start` until it hits the tree, then adjoined.
    fn walk_in<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        start: VertexId,
        cap: usize,
        trace: &mut (Vec<VertexId>, Vec<Option<EdgeId>>),
    ) -> Result<(), SampleError> {
        let (vertices, steps) = trace;
        vertices.clear();
        steps.clear();
        vertices.push(start);
        let mut u = start;
        while !self.in_tree[u] {
            if steps.len() == cap {
                return Err(SampleError::WalkCapExhausted { start, cap });
            }
            let (w, e) = lazy_move(self.g, u, rng)?;
            vertices.push(w);
            steps.push(e);
            u = w;
        }
        let (vertices, steps) = (std::mem::take(vertices), std::mem::take(steps));
        self.adjoin(&vertices, &steps);
        *trace = (vertices, steps);
        Ok(())
    }
}

/// Completes a run of Wilson's algorithm from `partial`.
///
/// Walks start from `starts` in order, then from every remaining vertex in
/// id order. Walk `i < predrawn.len()` follows `predrawn[i]` (which must
/// start at `starts[i]`); the others are drawn lazily from `fresh`. Each walk
/// is stopped on first hitting the current forest, loop-erased, and adjoined.
pub fn complete_run<R: Rng + ?Sized>(
    g: &Graph,
    partial: &PartialForest,
    starts: &[VertexId],
    predrawn: &[WalkPath],
    fresh: &mut FreshWalks<'_, R>,
    cap: Option<usize>,
) -> Result<OrientedForest, SampleError> {
    complete_run_traced(g, partial, starts, predrawn, fresh, cap).map(|o| o.forest)
}

/// [`complete_run`], also reporting where each pre-drawn walk first hit.
pub fn complete_run_traced<R: Rng + ?Sized>(
    g: &Graph,
    partial: &PartialForest,
    starts: &[VertexId],
    predrawn: &[WalkPath],
    fresh: &mut FreshWalks<'_, R>,
    cap: Option<usize>,
) -> Result<RunOutcome, SampleError> {
    let n = g.vertex_count();
    if partial.support().len() != n {
        return Err(ForestError::SizeMismatch {
            forest: partial.support().len(),
            graph: n,
        }
        .into());
    }
    if partial.is_empty() {
        return Err(SampleError::EmptyPartial);
    }
    debug_assert_eq!(partial.validate(g), Ok(()));
    for &v in starts {
        g.check_vertex(v)?;
    }
    for (index, w) in predrawn.iter().enumerate() {
        let expected = *starts.get(index).unwrap_or(&w.first());
        if w.first() != expected || index >= starts.len() {
            return Err(SampleError::StartMismatch {
                index,
                expected,
                found: w.first(),
            });
        }
    }
    let cap = cap.unwrap_or_else(|| default_cap(n));
    let mut grower = Grower {
        g,
        in_tree: partial.support().to_vec(),
        parent: partial.forest().parents().to_vec(),
        eraser: LoopEraser::new(n),
        erased: LoopErasedPath {
            vertices: Vec::new(),
            edges: Vec::new(),
        },
    };
    let mut first_hits = Vec::with_capacity(predrawn.len());
    let mut trace = (Vec::new(), Vec::new());
    for (i, start) in full_order(starts, n).enumerate() {
        if let Some(walk) = predrawn.get(i) {
            let hit = walk
                .vertices()
                .iter()
                .position(|&v| grower.in_tree[v])
                .ok_or(SampleError::PredrawnExhausted { index: i })?;
            let vertex = walk.vertices()[hit];
            first_hits.push(FirstHit {
                vertex,
                steps: hit,
                in_initial: partial.contains(vertex),
            });
            grower.adjoin(&walk.vertices()[..=hit], &walk.edges()[..hit]);
            continue;
        }
        if grower.in_tree[start] {
            continue;
        }
        match fresh {
            FreshWalks::Shared(r) => grower.walk_in(&mut **r, start, cap, &mut trace)?,
            FreshWalks::Keyed(seed) => grower.walk_in(&mut seed.child(start as u64).rng(), start, cap, &mut trace)?,
        }
    }
    let forest = OrientedForest {
        parent: grower.parent,
    };
    debug_assert_eq!(forest.validate(g), Ok(()));
    Ok(RunOutcome { forest, first_hits })
}

/// Wilson's algorithm from a single root, led by the given walks (typically
/// walks observed from some time `m` on), then fresh walks in id order.
pub fn sample_gm<R: Rng + ?Sized>(
    g: &Graph,
    root: VertexId,
    walks: &[WalkPath],
    fresh: &mut FreshWalks<'_, R>,
    cap: Option<usize>,
) -> Result<RunOutcome, SampleError> {
    g.check_vertex(root)?;
    let partial = PartialForest::from_roots(g.vertex_count(), &[root]);
    let starts: Vec<VertexId> = walks.iter().map(WalkPath::first).collect();
    complete_run_traced(g, &partial, &starts, walks, fresh, cap)
}

/// Orients an edge set as a forest. Components containing one of `roots` are
/// rooted there; any other component is rooted at its smallest vertex.
pub fn orient_edges(g: &Graph, edges: &[EdgeId], roots: &[VertexId]) -> Result<OrientedForest, ForestError> {
    let n = g.vertex_count();
    let mut incident: Vec<Vec<(VertexId, EdgeId)>> = vec![Vec::new(); n];
    for &e in edges {
        let (a, b) = g.endpoints(e);
        if a == b {
            return Err(ForestError::Cycle(a));
        }
        incident[a].push((b, e));
        incident[b].push((a, e));
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut reached_edges = 0usize;
    for r in roots.iter().copied().chain(0..n) {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut stack = vec![r];
        while let Some(v) = stack.pop() {
            for &(w, e) in &incident[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    reached_edges += 1;
                    stack.push(w);
                }
            }
        }
    }
    if reached_edges != edges.len() {
        let v = edges
            .iter()
            .map(|&e| g.endpoints(e).0)
            .find(|&v| parent[v].is_some())
            .unwrap_or(0);
        return Err(ForestError::Cycle(v));
    }
    Ok(OrientedForest { parent })
}

/// `n` on the first line, then `v parent` per vertex with `-1` for roots.
pub fn write_forest(f: &OrientedForest) -> String {
    let mut out = String::new();
    writeln!(out, "{}", f.vertex_count()).unwrap();
    for v in 0..f.vertex_count() {
        match f.parent_vertex(v) {
            Some(p) => writeln!(out, "{v} {p}").unwrap(),
            None => writeln!(out, "{v} -1").unwrap(),
        }
    }
    out
}

/// Reads [`write_forest`] output. Parent edges are resolved in `g` as the
/// lowest-id edge joining the two vertices.
pub fn read_forest(text: &str, g: &Graph) -> Result<OrientedForest, ForestError> {
    let err = |line: usize, message: &str| ForestError::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| err(1, "missing vertex count"))?;
    let n: usize = header.parse().map_err(|_| err(hl, "invalid vertex count"))?;
    if n != g.vertex_count() {
        return Err(ForestError::SizeMismatch {
            forest: n,
            graph: g.vertex_count(),
        });
    }
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        let v: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .filter(|&v| v < n)
            .ok_or_else(|| err(ln, "invalid vertex"))?;
        let p: i64 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(ln, "invalid parent"))?;
        if toks.next().is_some() || seen[v] {
            return Err(err(ln, "malformed or duplicate vertex line"));
        }
        seen[v] = true;
        if p >= 0 {
            let p = p as usize;
            if p >= n {
                return Err(err(ln, "parent out of range"));
            }
            let e = g
                .neighbors(v)
                .iter()
                .filter(|&&(w, _)| w == p)
                .map(|&(_, e)| e)
                .min()
                .ok_or_else(|| err(ln, "parent is not adjacent"))?;
            parent[v] = Some((p, e));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(err(hl, "missing vertex lines"));
    }
    let forest = OrientedForest { parent };
    check_acyclic(&forest.parent)?;
    Ok(forest)
}
