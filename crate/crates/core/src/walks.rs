//! Lazy random walks, loop erasure and path statistics.
//!
//! A lazy step holds in place with probability 1/2 and otherwise moves along
//! a uniformly chosen incident edge, so parallel edges are weighted by
//! multiplicity. Each step consumes exactly one draw from the stream, which
//! makes a walk a pure function of `(graph, start, rng address)`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, VertexId};
use crate::rng::RngSeed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("vertex {0} has no incident edges")]
    IsolatedVertex(VertexId),
    #[error("step cap must be positive")]
    ZeroCap,
}

/// Anything a walker can move on: a degree and an ordered list of incident
/// edge slots per vertex.
pub trait Walkable {
    fn vertex_count(&self) -> usize;
    fn degree(&self, v: VertexId) -> usize;
    /// Endpoint reached from `v` through incident slot `slot`, and the edge used.
    fn traverse(&self, v: VertexId, slot: usize) -> (VertexId, EdgeId);
}

impl Walkable for Graph {
    fn vertex_count(&self) -> usize {
        Graph::vertex_count(self)
    }

    fn degree(&self, v: VertexId) -> usize {
        Graph::degree(self, v)
    }

    #[inline]
    fn traverse(&self, v: VertexId, slot: usize) -> (VertexId, EdgeId) {
        self.neighbors(v)[slot]
    }
}

/// The `side^dim` torus, never materialized. Used when walks need a box far
/// larger than memory allows for an explicit graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImplicitTorus {
    dim: usize,
    side: usize,
}

impl ImplicitTorus {
    pub fn new(dim: usize, side: usize) -> Self {
        assert!(dim >= 1 && side >= 2, "degenerate torus");
        assert!(
            (side as f64).powi(dim as i32) < 2f64.powi(62),
            "torus too large for vertex ids"
        );
        ImplicitTorus { dim, side }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    fn stride(&self, j: usize) -> usize {
        self.side.pow(j as u32)
    }

    pub fn coords_of(&self, mut v: VertexId) -> Vec<usize> {
        (0..self.dim)
            .map(|_| {
                let x = v % self.side;
                v /= self.side;
                x
            })
            .collect()
    }

    pub fn index_of(&self, coords: &[usize]) -> VertexId {
        coords.iter().rev().fold(0, |acc, &x| acc * self.side + x)
    }

    /// The site at the middle of the torus.
    pub fn center(&self) -> VertexId {
        self.index_of(&vec![self.side / 2; self.dim])
    }

    /// True if the step `a -> b` crosses the periodic seam.
    pub fn wraps(&self, a: VertexId, b: VertexId) -> bool {
        let (xa, xb) = (self.coords_of(a), self.coords_of(b));
        xa.iter().zip(&xb).any(|(&p, &q)| p.abs_diff(q) == self.side - 1 && self.side > 2)
    }
}

impl Walkable for ImplicitTorus {
    fn vertex_count(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    fn degree(&self, _v: VertexId) -> usize {
        2 * self.dim
    }

    fn traverse(&self, v: VertexId, slot: usize) -> (VertexId, EdgeId) {
        let j = slot / 2;
        let stride = self.stride(j);
        let x = (v / stride) % self.side;
        if slot.is_multiple_of(2) {
            let w = if x + 1 < self.side { v + stride } else { v - x * stride };
            (w, v * self.dim + j)
        } else {
            let w = if x > 0 { v - stride } else { v + (self.side - 1) * stride };
            (w, w * self.dim + j)
        }
    }
}

/// One lazy step; returns the new position and the edge used, if any.
#[inline]
pub fn lazy_move<G, R>(g: &G, v: VertexId, rng: &mut R) -> Result<(VertexId, Option<EdgeId>), WalkError>
where
    G: Walkable + ?Sized,
    R: Rng + ?Sized,
{
    let deg = g.degree(v);
    if deg == 0 {
        return Err(WalkError::IsolatedVertex(v));
    }
    let draw = rng.gen_range(0..2 * deg as u32) as usize;
    if draw >= deg {
        Ok((v, None))
    } else {
        let (w, e) = g.traverse(v, draw);
        Ok((w, Some(e)))
    }
}

/// One non-lazy step along a uniformly chosen incident edge.
#[inline]
pub fn simple_move<G, R>(g: &G, v: VertexId, rng: &mut R) -> Result<(VertexId, EdgeId), WalkError>
where
    G: Walkable + ?Sized,
    R: Rng + ?Sized,
{
    let deg = g.degree(v);
    if deg == 0 {
        return Err(WalkError::IsolatedVertex(v));
    }
    Ok(g.traverse(v, rng.gen_range(0..deg as u32) as usize))
}

pub fn lazy_step<G, R>(g: &G, v: VertexId, rng: &mut R) -> Result<VertexId, WalkError>
where
    G: Walkable + ?Sized,
    R: Rng + ?Sized,
{
    lazy_move(g, v, rng).map(|(w, _)| w)
}

/// A finite walk trace. `vertices[i]` is the position at time
/// `start_time + i`; `edges[i]` is the edge used by step `i` (`None` for a
/// lazy hold).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    start_time: usize,
    vertices: Vec<VertexId>,
    edges: Vec<Option<EdgeId>>,
    truncated: bool,
}

impl WalkPath {
    pub fn new(start: VertexId) -> Self {
        Self::starting_at(start, 0)
    }

    pub fn starting_at(start: VertexId, start_time: usize) -> Self {
        WalkPath {
            start_time,
            vertices: vec![start],
            edges: Vec::new(),
            truncated: false,
        }
    }

    /// A trace without edge provenance, mostly for tests and dumps.
    pub fn from_vertices(start_time: usize, vertices: Vec<VertexId>) -> Self {
        assert!(!vertices.is_empty(), "a walk has at least one vertex");
        let edges = vec![None; vertices.len() - 1];
        WalkPath {
            start_time,
            vertices,
            edges,
            truncated: false,
        }
    }

    pub fn push(&mut self, v: VertexId, edge: Option<EdgeId>) {
        self.vertices.push(v);
        self.edges.push(edge);
    }

    pub fn start_time(&self) -> usize {
        self.start_time
    }

    pub fn end_time(&self) -> usize {
        self.start_time + self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Option<EdgeId>] {
        &self.edges
    }

    pub fn first(&self) -> VertexId {
        self.vertices[0]
    }

    pub fn last(&self) -> VertexId {
        *self.vertices.last().unwrap()
    }

    pub fn step_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn at_time(&self, t: usize) -> Option<VertexId> {
        t.checked_sub(self.start_time)
            .and_then(|i| self.vertices.get(i).copied())
    }

    /// The walk observed from absolute time `m` on, keeping absolute times.
    pub fn shifted(&self, m: usize) -> Option<WalkPath> {
        let i = m.checked_sub(self.start_time)?;
        if i >= self.vertices.len() {
            return None;
        }
        Some(WalkPath {
            start_time: m,
            vertices: self.vertices[i..].to_vec(),
            edges: self.edges[i..].to_vec(),
            truncated: self.truncated,
        })
    }

    /// The prefix ending at absolute time `t` (inclusive).
    pub fn truncated_at(&self, t: usize) -> WalkPath {
        let keep = (t + 1).saturating_sub(self.start_time).clamp(1, self.vertices.len());
        WalkPath {
            start_time: self.start_time,
            vertices: self.vertices[..keep].to_vec(),
            edges: self.edges[..keep - 1].to_vec(),
            truncated: self.truncated && keep == self.vertices.len(),
        }
    }

    /// Checks that every step holds or follows an edge of `g`.
    pub fn is_valid_on(&self, g: &Graph) -> bool {
        self.vertices.windows(2).zip(&self.edges).all(|(w, e)| match e {
            Some(e) => {
                *e < g.edge_count() && {
                    let (a, b) = g.endpoints(*e);
                    (a, b) == (w[0], w[1]) || (b, a) == (w[0], w[1])
                }
            }
            None => w[0] == w[1] || g.neighbors(w[0]).iter().any(|&(x, _)| x == w[1]),
        })
    }

    /// One vertex per line after a header naming the stream.
    pub fn write_trace(&self, seed: &RngSeed) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# walk master={} stream={} start_time={} truncated={}",
            seed.master, seed.stream, self.start_time, self.truncated
        )
        .unwrap();
        for v in &self.vertices {
            writeln!(out, "{v}").unwrap();
        }
        out
    }
}

/// A lazy walk of exactly `steps` steps.
pub fn draw_lazy_walk<G, R>(g: &G, start: VertexId, steps: usize, rng: &mut R) -> Result<WalkPath, WalkError>
where
    G: Walkable + ?Sized,
    R: Rng + ?Sized,
{
    let mut path = WalkPath::new(start);
    path.vertices.reserve(steps);
    path.edges.reserve(steps);
    let mut v = start;
    for _ in 0..steps {
        let (w, e) = lazy_move(g, v, rng)?;
        path.push(w, e);
        v = w;
    }
    Ok(path)
}

/// Runs a lazy walk until it stands on a vertex satisfying `stop`, or until
/// `cap` steps have been taken, in which case the path is flagged truncated.
pub fn run_until<G, R, F>(g: &G, start: VertexId, stop: F, rng: &mut R, cap: usize) -> Result<WalkPath, WalkError>
where
    G: Walkable + ?Sized,
    R: Rng + ?Sized,
    F: Fn(VertexId) -> bool,
{
    run_until_after(g, start, 0, stop, rng, cap)
}

/// As [`run_until`], but only stops at times `>= after`.
pub fn run_until_after<G, R, F>(
    g: &G,
    start: VertexId,
    after: usize,
    stop: F,
    rng: &mut R,
    cap: usize,
) -> Result<WalkPath, WalkError>
where
    G: Walkable + ?Sized,
    R: Rng + ?Sized,
    F: Fn(VertexId) -> bool,
{
    if cap == 0 {
        return Err(WalkError::ZeroCap);
    }
    let mut path = WalkPath::new(start);
    let mut v = start;
    while path.step_count() < after || !stop(v) {
        if path.step_count() == cap {
            path.truncated = true;
            break;
        }
        let (w, e) = lazy_move(g, v, rng)?;
        path.push(w, e);
        v = w;
    }
    Ok(path)
}

/// A self-avoiding path; `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopErasedPath {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Option<EdgeId>>,
}

impl LoopErasedPath {
    /// The path viewed as a walk trace starting at time 0.
    pub fn as_walk(&self) -> WalkPath {
        WalkPath {
            start_time: 0,
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            truncated: false,
        }
    }
}

/// Chronological loop erasure: scanning forward, a return to a vertex of the
/// current partial path cuts the path back to that vertex.
pub fn loop_erase(p: &WalkPath) -> LoopErasedPath {
    let mut position: HashMap<VertexId, usize> = HashMap::new();
    let mut vertices = vec![p.vertices[0]];
    let mut edges = Vec::new();
    position.insert(p.vertices[0], 0);
    for (&v, &e) in p.vertices[1..].iter().zip(&p.edges) {
        if let Some(&j) = position.get(&v) {
            for w in vertices.drain(j + 1..) {
                position.remove(&w);
            }
            edges.truncate(j);
        } else {
            position.insert(v, vertices.len());
            vertices.push(v);
            edges.push(e);
        }
    }
    LoopErasedPath { vertices, edges }
}

/// Loop erasure with a dense position table reused across calls.
#[derive(Clone, Debug)]
pub(crate) struct LoopEraser {
    position: Vec<usize>,
}

impl LoopEraser {
    pub(crate) fn new(n: usize) -> Self {
        LoopEraser {
            position: vec![usize::MAX; n],
        }
    }

    pub(crate) fn erase(&mut self, vertices: &[VertexId], steps: &[Option<EdgeId>], out: &mut LoopErasedPath) {
        out.vertices.clear();
        out.edges.clear();
        out.vertices.push(vertices[0]);
        self.position[vertices[0]] = 0;
        for (&v, &e) in vertices[1..].iter().zip(steps) {
            let j = self.position[v];
            if j != usize::MAX {
                for &w in &out.vertices[j + 1..] {
                    self.position[w] = usize::MAX;
                }
                out.vertices.truncate(j + 1);
                out.edges.truncate(j);
            } else {
                self.position[v] = out.vertices.len();
                out.vertices.push(v);
                out.edges.push(e);
            }
        }
        for &w in &out.vertices {
            self.position[w] = usize::MAX;
        }
    }
}

/// Smallest absolute time `t >= after` with `p` at a target vertex.
pub fn hitting_time<F>(p: &WalkPath, target: F, after: usize) -> Option<usize>
where
    F: Fn(VertexId) -> bool,
{
    let from = after.saturating_sub(p.start_time);
    p.vertices
        .iter()
        .enumerate()
        .skip(from)
        .find(|&(_, &v)| target(v))
        .map(|(i, _)| p.start_time + i)
}

/// Number of distinct vertices visited by both walks at absolute times `>= from`.
pub fn intersection_count(p1: &WalkPath, p2: &WalkPath, from: usize) -> usize {
    let tail = |p: &WalkPath| -> HashSet<VertexId> {
        p.vertices
            .iter()
            .skip(from.saturating_sub(p.start_time))
            .copied()
            .collect()
    };
    let a = tail(p1);
    tail(p2).iter().filter(|v| a.contains(v)).count()
}
