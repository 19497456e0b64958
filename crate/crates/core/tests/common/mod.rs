//! Checks shared by the property, statistical and acceptance suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use usf_core::forest::{components, f_sub_r, future, past, ComponentLabeling, PropertyEvaluator};
use usf_core::graph::{DisjointSets, EdgeId, Graph, VertexId};
use usf_core::oracle::{is_forest, random_connected_graph};
use usf_core::walks::{loop_erase, WalkPath};
use usf_core::wilson::{orient_edges, OrientedForest};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_graph(seed: u64, max_vertices: usize) -> Graph {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_vertices.max(2));
    let extra = r.gen_range(0..=n);
    random_connected_graph(n, extra, &mut r)
}

/// Every oriented forest of `g`: each acyclic edge subset, with every
/// choice of one root per component.
pub fn all_oriented_forests(g: &Graph) -> Vec<OrientedForest> {
    let m = g.edge_count();
    assert!(m <= 16, "exhaustive enumeration needs a small graph");
    let n = g.vertex_count();
    let mut out = Vec::new();
    for mask in 0u32..1 << m {
        let edges: Vec<EdgeId> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        if !is_forest(g, &edges) {
            continue;
        }
        let mut sets = DisjointSets::new(n);
        for &e in &edges {
            let (a, b) = g.endpoints(e);
            sets.union(a, b);
        }
        let mut classes: Vec<Vec<VertexId>> = Vec::new();
        let mut index = vec![usize::MAX; n];
        for v in 0..n {
            let r = sets.find(v);
            if index[r] == usize::MAX {
                index[r] = classes.len();
                classes.push(Vec::new());
            }
            classes[index[r]].push(v);
        }
        let mut choice = vec![0usize; classes.len()];
        loop {
            let roots: Vec<VertexId> = classes.iter().zip(&choice).map(|(c, &i)| c[i]).collect();
            out.push(orient_edges(g, &edges, &roots).expect("acyclic edge sets orient"));
            let mut k = 0;
            while k < classes.len() {
                choice[k] += 1;
                if choice[k] < classes[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == classes.len() {
                break;
            }
        }
    }
    out
}

/// `u` is in the past of `v` exactly when `v` is in the future of `u`.
pub fn future_past_dual(f: &OrientedForest) -> bool {
    let n = f.vertex_count();
    (0..n).all(|v| {
        let p = past(f, v);
        (0..n).all(|u| p.contains(&u) == future(f, u).contains(&v))
    })
}

/// Component labels by breadth-first search over the undirected forest edges.
pub fn bfs_partition_matches(f: &OrientedForest, labels: &ComponentLabeling) -> bool {
    let n = f.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for v in 0..n {
        if let Some(p) = f.parent_vertex(v) {
            adj[v].push(p);
            adj[p].push(v);
        }
    }
    let mut seen = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] != usize::MAX {
            continue;
        }
        seen[s] = count;
        let mut queue = vec![s];
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if seen[w] == usize::MAX {
                    seen[w] = count;
                    queue.push(w);
                }
            }
        }
        count += 1;
    }
    count == labels.count() && (0..n).all(|a| (0..n).all(|b| (seen[a] == seen[b]) == labels.same(a, b)))
}

/// Erasing twice changes nothing, and both ends survive.
pub fn loop_erasure_sound(p: &WalkPath) -> bool {
    let once = loop_erase(p);
    let twice = loop_erase(&once.as_walk());
    once == twice && once.vertices.first() == Some(&p.first()) && once.vertices.last() == Some(&p.last())
}

/// `F_R` is the set of vertices whose past leaves the ball, and shrinks as `R` grows.
pub fn f_sub_r_sound(f: &OrientedForest, g: &Graph, u1: VertexId, radii: &[usize]) -> bool {
    let mut previous: Option<Vec<bool>> = None;
    for &r in radii {
        let fr = f_sub_r(f, g, u1, r);
        let ball = g.ball_mask(u1, r);
        let membership = (0..g.vertex_count()).all(|v| fr.contains(v) == past(f, v).iter().any(|&w| !ball[w]));
        if !membership {
            return false;
        }
        if let Some(prev) = &previous {
            if (0..g.vertex_count()).any(|v| fr.contains(v) && !prev[v]) {
                return false;
            }
        }
        previous = Some(fr.support().to_vec());
    }
    true
}

/// Replacing each `u_i` by a random member of its component never changes the verdict.
pub fn rerooting_invariant<R: Rng>(
    eval: &PropertyEvaluator<'_>,
    f: &OrientedForest,
    u: &[VertexId],
    trials: usize,
    rng: &mut R,
) -> bool {
    let labels = components(f);
    let base = eval.eval(&labels, u).expect("arity matches").holds;
    (0..trials).all(|_| {
        let moved: Vec<VertexId> = u
            .iter()
            .map(|&x| {
                let members = labels.members(labels.label(x));
                members[rng.gen_range(0..members.len())]
            })
            .collect();
        eval.eval(&labels, &moved).expect("arity matches").holds == base
    })
}
