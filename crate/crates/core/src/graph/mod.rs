//! Finite multigraphs with stable vertex and edge identities.
//!
//! Vertices are dense ids `0..n`, edges dense ids `0..m`. Parallel edges are
//! distinct edges; a self-loop appears twice in the adjacency of its vertex.
//! A graph may designate one `sink` vertex, the merged boundary of a wired
//! box. The sink stands in for the point at infinity: metric balls never
//! contain it and never route through it.

mod io;
mod lattice;
mod quotient;

use std::collections::VecDeque;

use thiserror::Error;

pub use io::{read_edge_list, write_edge_list};
pub use lattice::{make_box, Boundary, BoxSpec, MAX_LATTICE_BITS};
pub use quotient::{contract_and_delete, wire_boundary, Quotient};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    VertexOutOfRange { vertex: VertexId, count: usize },
    #[error("edge {edge} out of range (graph has {count} edges)")]
    EdgeOutOfRange { edge: EdgeId, count: usize },
    #[error("edge {0} is both contracted and deleted")]
    ContractDeleteOverlap(EdgeId),
    #[error("boundary vertex set is empty")]
    EmptyBoundary,
    #[error("unsupported lattice: dimension {dimension}, side {side} ({reason})")]
    UnsupportedLattice {
        dimension: usize,
        side: usize,
        reason: &'static str,
    },
    #[error("label block has dimension {found}, expected {expected}")]
    LabelDimension { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Optional per-vertex integer coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    dim: usize,
    coords: Vec<i32>,
    present: Vec<bool>,
}

impl Labels {
    pub fn new(dim: usize, vertex_count: usize) -> Self {
        Labels {
            dim,
            coords: vec![0; dim * vertex_count],
            present: vec![false; vertex_count],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, v: VertexId, coords: &[i32]) {
        assert_eq!(coords.len(), self.dim, "coordinate arity");
        self.coords[v * self.dim..(v + 1) * self.dim].copy_from_slice(coords);
        self.present[v] = true;
    }

    pub fn get(&self, v: VertexId) -> Option<&[i32]> {
        if *self.present.get(v)? {
            Some(&self.coords[v * self.dim..(v + 1) * self.dim])
        } else {
            None
        }
    }

    fn len(&self) -> usize {
        self.present.len()
    }
}

/// Immutable finite multigraph in compressed adjacency form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<(VertexId, EdgeId)>,
    endpoints: Vec<(VertexId, VertexId)>,
    labels: Option<Labels>,
    sink: Option<VertexId>,
}

impl Graph {
    /// Builds a graph on `n` vertices; edge `i` joins `edges[i].0` and `edges[i].1`.
    pub fn from_edges(n: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self, GraphError> {
        for &(u, v) in &edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: w,
                        count: n,
                    });
                }
            }
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![(0, 0); offsets[n]];
        for (e, &(u, v)) in edges.iter().enumerate() {
            adjacency[fill[u]] = (v, e);
            fill[u] += 1;
            adjacency[fill[v]] = (u, e);
            fill[v] += 1;
        }
        Ok(Graph {
            offsets,
            adjacency,
            endpoints: edges,
            labels: None,
            sink: None,
        })
    }

    pub fn with_labels(mut self, labels: Labels) -> Self {
        assert_eq!(labels.len(), self.vertex_count(), "one label slot per vertex");
        self.labels = Some(labels);
        self
    }

    pub fn with_sink(mut self, sink: Option<VertexId>) -> Self {
        if let Some(s) = sink {
            assert!(s < self.vertex_count(), "sink out of range");
        }
        self.sink = sink;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Incident `(neighbor, edge)` pairs; parallel edges appear once each.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.endpoints[e]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.endpoints
    }

    /// The endpoint of `e` opposite to `v`.
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn coords(&self, v: VertexId) -> Option<&[i32]> {
        self.labels.as_ref()?.get(v)
    }

    pub fn sink(&self) -> Option<VertexId> {
        self.sink
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange {
                vertex: v,
                count: self.vertex_count(),
            })
        }
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<(), GraphError> {
        if e < self.edge_count() {
            Ok(())
        } else {
            Err(GraphError::EdgeOutOfRange {
                edge: e,
                count: self.edge_count(),
            })
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        reached == n
    }

    /// Graph distances from `center`, never entering the sink. The sink and
    /// vertices only reachable through it get `None`.
    pub fn distances_from(&self, center: VertexId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        if Some(center) == self.sink {
            return dist;
        }
        dist[center] = Some(0);
        let mut queue = VecDeque::from([center]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for &(w, _) in self.neighbors(v) {
                if dist[w].is_none() && Some(w) != self.sink {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Membership mask of the ball of graph-distance radius `radius` around `center`.
    pub fn ball_mask(&self, center: VertexId, radius: usize) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        if Some(center) == self.sink {
            return mask;
        }
        mask[center] = true;
        let mut frontier = vec![center];
        for _ in 0..radius {
            let mut next = Vec::new();
            for v in frontier {
                for &(w, _) in self.neighbors(v) {
                    if !mask[w] && Some(w) != self.sink {
                        mask[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        mask
    }

    pub fn ball(&self, center: VertexId, radius: usize) -> Vec<VertexId> {
        mask_to_vertices(&self.ball_mask(center, radius))
    }

    /// Edges with both endpoints inside the mask, in id order.
    pub fn edges_within(&self, mask: &[bool]) -> Vec<EdgeId> {
        self.endpoints
            .iter()
            .enumerate()
            .filter(|(_, &(u, v))| mask[u] && mask[v])
            .map(|(e, _)| e)
            .collect()
    }
}

pub(crate) fn mask_to_vertices(mask: &[bool]) -> Vec<VertexId> {
    mask.iter()
        .enumerate()
        .filter_map(|(v, &m)| m.then_some(v))
        .collect()
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}
