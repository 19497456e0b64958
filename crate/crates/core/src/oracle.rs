//! Exact small-graph oracles: spanning-tree enumeration and the matrix-tree count.

use std::collections::BTreeSet;

use rand::Rng;

use crate::graph::{DisjointSets, EdgeId, Graph, VertexId};
use crate::stats::{chi_square_gof, ChiSquareTest};

/// Every spanning tree of `g` as a sorted edge-id list. Parallel edges give
/// distinct trees; self-loops never belong to one. Exponential in the edge
/// count, meant for graphs with a handful of vertices.
pub fn spanning_trees(g: &Graph) -> Vec<Vec<EdgeId>> {
    let n = g.vertex_count();
    let candidates: Vec<EdgeId> = (0..g.edge_count())
        .filter(|&e| {
            let (a, b) = g.endpoints(e);
            a != b
        })
        .collect();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut chosen = Vec::with_capacity(n - 1);
    extend_trees(g, &candidates, 0, &mut chosen, n - 1, &mut out);
    out
}

fn extend_trees(
    g: &Graph,
    candidates: &[EdgeId],
    from: usize,
    chosen: &mut Vec<EdgeId>,
    target: usize,
    out: &mut Vec<Vec<EdgeId>>,
) {
    if chosen.len() == target {
        out.push(chosen.clone());
        return;
    }
    if candidates.len() - from < target - chosen.len() {
        return;
    }
    for i in from..candidates.len() {
        chosen.push(candidates[i]);
        if is_forest(g, chosen) {
            extend_trees(g, candidates, i + 1, chosen, target, out);
        }
        chosen.pop();
    }
}

/// Whether an edge set is acyclic.
pub fn is_forest(g: &Graph, edges: &[EdgeId]) -> bool {
    let mut sets = DisjointSets::new(g.vertex_count());
    edges.iter().all(|&e| {
        let (a, b) = g.endpoints(e);
        sets.union(a, b)
    })
}

/// Spanning trees containing all of `present` and none of `absent`.
pub fn conditional_trees(g: &Graph, present: &[EdgeId], absent: &[EdgeId]) -> Vec<Vec<EdgeId>> {
    spanning_trees(g)
        .into_iter()
        .filter(|t| present.iter().all(|e| t.contains(e)) && absent.iter().all(|e| !t.contains(e)))
        .collect()
}

/// The distinct restrictions of spanning trees to the edges inside
/// `B(center, radius)`: the ball configurations of positive probability.
pub fn ball_configurations(g: &Graph, center: VertexId, radius: usize) -> Vec<Vec<EdgeId>> {
    let inside: BTreeSet<EdgeId> = g.edges_within(&g.ball_mask(center, radius)).into_iter().collect();
    let configs: BTreeSet<Vec<EdgeId>> = spanning_trees(g)
        .into_iter()
        .map(|t| t.into_iter().filter(|e| inside.contains(e)).collect())
        .collect();
    configs.into_iter().collect()
}

/// Number of spanning trees via the matrix-tree theorem: the determinant of
/// the Laplacian with the last row and column removed, by fraction-free
/// elimination in exact integer arithmetic.
pub fn matrix_tree_count(g: &Graph) -> u128 {
    let n = g.vertex_count();
    if n <= 1 {
        return 1;
    }
    let k = n - 1;
    let mut m = vec![vec![0i128; k]; k];
    for &(a, b) in g.edges() {
        if a == b {
            continue;
        }
        if a < k {
            m[a][a] += 1;
        }
        if b < k {
            m[b][b] += 1;
        }
        if a < k && b < k {
            m[a][b] -= 1;
            m[b][a] -= 1;
        }
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..k {
        if m[p][p] == 0 {
            match (p + 1..k).find(|&r| m[r][p] != 0) {
                Some(r) => {
                    m.swap(p, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in p + 1..k {
            for j in p + 1..k {
                m[i][j] = (m[i][j] * m[p][p] - m[i][p] * m[p][j]) / prev;
            }
        }
        prev = m[p][p];
    }
    let det = sign * m[k - 1][k - 1];
    u128::try_from(det).expect("Laplacian minors are nonnegative")
}

/// A connected multigraph on `n` vertices: a random recursive tree plus
/// `extra` uniformly placed non-loop edges (parallel edges allowed).
pub fn random_connected_graph<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> Graph {
    let mut edges = Vec::with_capacity(n + extra);
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    if n >= 2 {
        for _ in 0..extra {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            edges.push((a, b));
        }
    }
    Graph::from_edges(n, edges).expect("endpoints are in range")
}

/// The complete graph on `n` vertices.
pub fn complete_graph(n: usize) -> Graph {
    let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    Graph::from_edges(n, edges).expect("endpoints are in range")
}

/// The cycle on `n` vertices, edge `i` joining `i` and `i + 1 mod n`.
pub fn cycle_graph(n: usize) -> Graph {
    let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, edges).expect("endpoints are in range")
}

/// Chi-square test of `samples` draws of `sample` (each a sorted edge list)
/// against the uniform law on the enumerated spanning trees of `g`. A draw
/// that is not a spanning tree makes the statistic infinite.
pub fn uniformity_test<F>(g: &Graph, samples: usize, mut sample: F) -> ChiSquareTest
where
    F: FnMut(usize) -> Vec<EdgeId>,
{
    let mut trees = spanning_trees(g);
    trees.sort();
    let mut counts = vec![0u64; trees.len() + 1];
    for i in 0..samples {
        let edges = sample(i);
        let slot = trees.binary_search(&edges).unwrap_or(trees.len());
        counts[slot] += 1;
    }
    let mut probs = vec![1.0 / trees.len() as f64; trees.len()];
    probs.push(0.0);
    chi_square_gof(&counts, &probs)
}
