//! Distributional checks against exact laws, at fixed seeds.

mod common;

use std::collections::{BTreeSet, HashMap};

use usf_core::coupling::{
    build_fmr, condition_on_ball, coupling_sample, draw_coupling_walks, escaped_by, event_b_components,
    sample_conditioned, tv_between, window_key,
};
use usf_core::graph::{make_box, Boundary, BoxSpec, Graph};
use usf_core::oracle::{
    ball_configurations, complete_graph, conditional_trees, cycle_graph, matrix_tree_count, random_connected_graph,
    uniformity_test,
};
use usf_core::rng::RngSeed;
use usf_core::stats::chi_square_gof;
use usf_core::walks::draw_lazy_walk;
use usf_core::wilson::{wilson_ust, wilson_ust_with, FreshWalks, Laziness, WilsonOptions};

use common::*;

const N: usize = 100_000;

#[test]
fn wilson_law_does_not_depend_on_the_walk_order() {
    let opts = WilsonOptions { laziness: Laziness::Simple, cap: None };
    for (g, orders) in [
        (cycle_graph(3), [vec![1, 2], vec![2, 1]]),
        (cycle_graph(4), [vec![1, 2, 3], vec![3, 2, 1]]),
        (complete_graph(4), [vec![2], vec![3, 1, 2]]),
    ] {
        for (k, order) in orders.iter().enumerate() {
            let mut r = RngSeed::new(11, k as u64).rng();
            let t = uniformity_test(&g, N, |_| wilson_ust_with(&g, 0, order, &mut r, &opts).unwrap().edge_set());
            assert!(t.p_value > 1e-3, "order {order:?}: {t:?}");
        }
    }
}

#[test]
fn lazy_and_simple_walks_give_the_same_tree_law() {
    let g = make_box(&BoxSpec::new(2, 2, Boundary::Torus)).unwrap();
    let opts = WilsonOptions { laziness: Laziness::Lazy, cap: None };
    let mut r = rng(12);
    let t = uniformity_test(&g, N, |_| wilson_ust_with(&g, 3, &[], &mut r, &opts).unwrap().edge_set());
    assert!(t.p_value > 1e-3, "{t:?}");
}

/// `(G_m, X_m)` against an independent forest and walk position, on the
/// wired segment of length 5 from its centre, with both arms voided when the
/// walk reaches the sink by time `m`.
#[test]
fn forest_grown_from_time_m_is_independent_of_the_walk_position() {
    const M: usize = 3;
    let g = make_box(&BoxSpec::new(1, 5, Boundary::Wired)).unwrap();
    let sink = g.sink().unwrap();
    let window = g.edges_within(&g.ball_mask(2, 2));
    let coupled: Vec<u64> = (0..N as u64)
        .filter_map(|j| {
            let s = coupling_sample(&g, &[2], &[M], &[0], RngSeed::new(13, j), None).unwrap()?;
            let x = s.walks[0].at_time(M).unwrap() as u64;
            Some(window_key(&s.gm[0].1.forest, &g, &window) << 8 | x)
        })
        .collect();
    let independent: Vec<u64> = (0..N as u64)
        .filter_map(|j| {
            let seed = RngSeed::new(14, j);
            let f = wilson_ust(&g, sink, &[], &mut seed.child(0).rng()).unwrap();
            let walk = draw_lazy_walk(&g, 2, M, &mut seed.child(1).rng()).unwrap();
            if escaped_by(&g, std::slice::from_ref(&walk), M) {
                return None;
            }
            Some(window_key(&f, &g, &window) << 8 | walk.last() as u64)
        })
        .collect();
    let tv = tv_between(&coupled, &independent, "forest and walk position").unwrap();
    assert!(tv.estimate < 0.02, "{tv:?}");
}

#[test]
fn interpolating_forest_is_uniform_on_the_wired_segment() {
    let g = make_box(&BoxSpec::new(1, 3, Boundary::Wired)).unwrap();
    let sink = g.sink().unwrap();
    let mut roots = vec![false; g.vertex_count()];
    roots[sink] = true;
    let t = uniformity_test(&g, N, |k| {
        let seed = RngSeed::new(15, k as u64);
        let f = wilson_ust(&g, sink, &[], &mut seed.child(0).rng()).unwrap();
        let walks = draw_coupling_walks(&g, &[0, 2], 2, &roots, seed.child(1), 1000).unwrap();
        let out = build_fmr(&g, &f, &walks, 2, 1, 1, &mut FreshWalks::keyed(seed.child(2)), None).unwrap();
        out.run.forest.edge_set()
    });
    assert_eq!(t.dof, 3);
    assert!(t.p_value > 1e-3, "{t:?}");
}

/// Graphs with at most 8 spanning trees: cycles, and random sparse graphs
/// filtered by their tree count, deduplicated by edge list.
fn few_tree_graphs() -> Vec<Graph> {
    let mut out: Vec<Graph> = (3..=8).map(cycle_graph).collect();
    let mut seen = BTreeSet::new();
    let mut r = rng(16);
    for _ in 0..400 {
        let n = 2 + out.len() % 6;
        let g = random_connected_graph(n, 1 + out.len() % 2, &mut r);
        let count = matrix_tree_count(&g);
        let edges: Vec<_> = (0..g.edge_count()).map(|e| g.endpoints(e)).collect();
        if count > 1 && count <= 8 && seen.insert(edges) {
            out.push(g);
        }
        if out.len() >= 20 {
            break;
        }
    }
    out
}

#[test]
fn conditioned_trees_follow_the_enumerated_law() {
    const SAMPLES: usize = 20_000;
    let graphs = few_tree_graphs();
    assert!(graphs.len() >= 12);
    let mut cases = Vec::new();
    for g in &graphs {
        for center in 0..g.vertex_count().min(3) {
            for a in ball_configurations(g, center, 1) {
                cases.push((g, center, a));
            }
        }
    }
    // Bonferroni over all configurations.
    let alpha = 1e-3 / cases.len() as f64;
    for (k, (g, center, a)) in cases.iter().enumerate() {
        let inside = g.edges_within(&g.ball_mask(*center, 1));
        let absent: Vec<usize> = inside.into_iter().filter(|e| !a.contains(e)).collect();
        let mut trees = conditional_trees(g, a, &absent);
        trees.sort();
        let q = condition_on_ball(g, *center, 1, a).unwrap();
        let mut r = RngSeed::new(17, k as u64).rng();
        let mut counts = vec![0u64; trees.len() + 1];
        for _ in 0..SAMPLES {
            let t = sample_conditioned(&q, a, &mut r).unwrap().edge_set();
            counts[trees.binary_search(&t).unwrap_or(trees.len())] += 1;
        }
        let mut probs = vec![1.0 / trees.len() as f64; trees.len()];
        probs.push(0.0);
        let test = chi_square_gof(&counts, &probs);
        assert!(test.p_value > alpha, "case {k}, A = {a:?}: {test:?}");
    }
}

/// The hitting and component descriptions of `B` agree on every sample of
/// small random graphs, across times and radii.
#[test]
fn b_descriptions_agree_on_small_graphs() {
    let mut compared = 0;
    let mut tally: HashMap<bool, usize> = HashMap::new();
    for k in 0..400u64 {
        let g = small_graph(k, 7);
        if g.vertex_count() < 3 {
            continue;
        }
        let u = [1, 2];
        let s = coupling_sample(&g, &u, &[0, 1, 3], &[0, 1, 2], RngSeed::new(18, k), None)
            .unwrap()
            .expect("no sink, so no voiding");
        for p in &s.points {
            assert_eq!(p.b, p.b_components, "graph seed {k}, m {}, R {}", p.m, p.radius);
            assert_eq!(p.b, event_b_components(&p.fmr));
            *tally.entry(p.b).or_default() += 1;
            compared += 1;
        }
    }
    assert!(compared > 2000);
    assert!(tally.len() == 2, "both outcomes occur: {tally:?}");
}
