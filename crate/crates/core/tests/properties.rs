mod common;

use proptest::prelude::*;
use usf_core::coupling::{coupling_sample, event_b_components, event_c, tv_between};
use usf_core::experiments::{parse_config, run_connectivity_transition, to_toml, write_csv};
use usf_core::forest::{components, f_sub_r, PropertyEvaluator, PropertyKind, PropertySpec, Window};
use usf_core::graph::{contract_and_delete, make_box, Boundary, BoxSpec};
use usf_core::oracle::{cycle_graph, complete_graph};
use usf_core::rng::RngSeed;
use usf_core::walks::draw_lazy_walk;
use usf_core::wilson::{orient_edges, wilson_ust, wilson_ust_with, Laziness, WilsonOptions};

use common::*;

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Torus), Just(Boundary::Wired), Just(Boundary::Free)]
}

fn small_box() -> impl Strategy<Value = BoxSpec> {
    (1usize..=3, 2usize..=5, boundary()).prop_map(|(d, l, b)| BoxSpec::new(d, l, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degrees_sum_to_twice_the_edges(spec in small_box(), seed in any::<u64>()) {
        for g in [make_box(&spec).unwrap(), small_graph(seed, 8)] {
            let total: usize = (0..g.vertex_count()).map(|v| g.degree(v)).sum();
            prop_assert_eq!(total, 2 * g.edge_count());
        }
    }

    #[test]
    fn torus_is_regular(d in 1usize..=3, l in 2usize..=6) {
        let g = make_box(&BoxSpec::new(d, l, Boundary::Torus)).unwrap();
        prop_assert!((0..g.vertex_count()).all(|v| g.degree(v) == 2 * d));
    }

    #[test]
    fn projection_is_onto_and_fibers_partition(seed in any::<u64>(), keep in any::<u32>(), drop in any::<u32>()) {
        let g = small_graph(seed, 7);
        let tree = wilson_ust(&g, 0, &[], &mut rng(seed)).unwrap().edge_set();
        let contract: Vec<usize> = tree.iter().enumerate().filter(|&(i, _)| keep >> (i % 32) & 1 == 1).map(|(_, &e)| e).collect();
        let delete: Vec<usize> = (0..g.edge_count())
            .filter(|e| !contract.contains(e) && drop >> (e % 32) & 1 == 1)
            .collect();
        let q = contract_and_delete(&g, &contract, &delete).unwrap();
        let n = q.derived().vertex_count();
        prop_assert_eq!(n, g.vertex_count() - contract.len());
        let mut fiber = vec![0usize; n];
        for v in 0..g.vertex_count() {
            fiber[q.project(v)] += 1;
        }
        prop_assert!(fiber.iter().all(|&k| k > 0));
        prop_assert_eq!(fiber.iter().sum::<usize>(), g.vertex_count());
        prop_assert_eq!(q.derived().edge_count(), g.edge_count() - contract.len() - delete.len());
        for e in 0..q.derived().edge_count() {
            let (a, b) = g.endpoints(q.base_edge(e));
            let (x, y) = q.derived().endpoints(e);
            prop_assert!((q.project(a), q.project(b)) == (x, y) || (q.project(a), q.project(b)) == (y, x));
        }
    }

    #[test]
    fn loop_erasure_is_idempotent_and_keeps_ends(seed in any::<u64>(), steps in 0usize..200) {
        let g = small_graph(seed, 8);
        let walk = draw_lazy_walk(&g, 0, steps, &mut rng(seed ^ 1)).unwrap();
        prop_assert!(loop_erasure_sound(&walk));
    }

    #[test]
    fn walks_are_pure_functions_of_their_address(seed in any::<u64>(), stream in any::<u64>()) {
        let g = make_box(&BoxSpec::new(2, 5, Boundary::Wired)).unwrap();
        let address = RngSeed::new(seed, stream);
        let a = draw_lazy_walk(&g, 3, 100, &mut address.rng()).unwrap();
        let b = draw_lazy_walk(&g, 3, 100, &mut address.rng()).unwrap();
        prop_assert_eq!(a.write_trace(&address), b.write_trace(&address));
    }

    #[test]
    fn sampled_forests_are_valid(seed in any::<u64>(), lazy in any::<bool>(), order in proptest::collection::vec(0usize..8, 0..4)) {
        let g = small_graph(seed, 8);
        let order: Vec<usize> = order.into_iter().filter(|&v| v < g.vertex_count()).collect();
        let opts = WilsonOptions { laziness: if lazy { Laziness::Lazy } else { Laziness::Simple }, cap: None };
        let f = wilson_ust_with(&g, g.vertex_count() - 1, &order, &mut rng(seed), &opts).unwrap();
        prop_assert_eq!(f.validate(&g), Ok(()));
        prop_assert_eq!(f.root_count(), 1);
    }

    #[test]
    fn components_agree_with_breadth_first_search(seed in any::<u64>(), keep in any::<u32>()) {
        let g = small_graph(seed, 8);
        let tree = wilson_ust(&g, 0, &[], &mut rng(seed)).unwrap().edge_set();
        let kept: Vec<usize> = tree.iter().enumerate().filter(|&(i, _)| keep >> (i % 32) & 1 == 1).map(|(_, &e)| e).collect();
        let f = orient_edges(&g, &kept, &[]).unwrap();
        prop_assert!(bfs_partition_matches(&f, &components(&f)));
    }

    #[test]
    fn f_sub_r_is_the_set_of_escaping_pasts(seed in any::<u64>(), side in 3usize..=7) {
        let g = make_box(&BoxSpec::new(2, side, Boundary::Wired)).unwrap();
        let f = wilson_ust(&g, g.sink().unwrap(), &[], &mut rng(seed)).unwrap();
        let u1 = (seed as usize) % (side * side);
        prop_assert!(f_sub_r_sound(&f, &g, u1, &[0, 1, 2, 3, 5, 8]));
    }

    #[test]
    fn event_c_is_monotone_in_r(seed in any::<u64>()) {
        let spec = BoxSpec::new(2, 6, Boundary::Wired);
        let g = make_box(&spec).unwrap();
        let f = wilson_ust(&g, g.sink().unwrap(), &[], &mut rng(seed)).unwrap();
        let u = [14usize, 21];
        for radius in 0..5 {
            let f_r = f_sub_r(&f, &g, u[0], radius);
            for r in 1..5 {
                prop_assert!(!event_c(&f_r, &g, &u, r) || event_c(&f_r, &g, &u, r - 1));
            }
        }
    }

    #[test]
    fn verdicts_survive_rerooting(seed in any::<u64>(), threshold in 1usize..6) {
        let spec = BoxSpec::new(2, 8, Boundary::Wired);
        let g = make_box(&spec).unwrap();
        let f = wilson_ust(&g, g.sink().unwrap(), &[], &mut rng(seed)).unwrap().detach(g.sink().unwrap());
        let property = PropertySpec { arity: 2, kind: PropertyKind::AdjacencyCount { threshold, window: Window::InnerBox { fraction: 0.6 } } };
        let eval = PropertyEvaluator::new(property, &g).unwrap();
        let u = [spec.index_of(&[3, 3]).unwrap(), spec.index_of(&[4, 3]).unwrap()];
        prop_assert!(rerooting_invariant(&eval, &f, &u, 20, &mut rng(seed ^ 7)));
    }

    #[test]
    fn tv_is_a_metric_on_samples(
        a in proptest::collection::vec(0u64..6, 1..40),
        b in proptest::collection::vec(0u64..6, 1..40),
        c in proptest::collection::vec(0u64..6, 1..40),
    ) {
        let tv = |x: &[u64], y: &[u64]| tv_between(x, y, "t").unwrap().estimate;
        prop_assert!((tv(&a, &b) - tv(&b, &a)).abs() < 1e-12);
        prop_assert!(tv(&a, &c) <= tv(&a, &b) + tv(&b, &c) + 1e-12);
        prop_assert!(tv(&a, &a) == 0.0);
    }

    #[test]
    fn hitting_and_component_descriptions_of_b_agree(seed in any::<u64>()) {
        let spec = BoxSpec::new(2, 5, Boundary::Wired);
        let g = make_box(&spec).unwrap();
        let u = [12usize, 13, 7];
        if let Some(s) = coupling_sample(&g, &u, &[0, 1, 3], &[0, 1, 2, 4], RngSeed::new(seed, 0), None).unwrap() {
            for p in &s.points {
                prop_assert_eq!(p.b, p.b_components);
                prop_assert_eq!(p.b_components, event_b_components(&p.fmr));
            }
        }
    }

    #[test]
    fn configs_round_trip(master in 0..=i64::MAX as u64, replicas in 1u64..10_000, distance in 1usize..4,
                          boxes in proptest::collection::vec((1usize..6, 2usize..30), 1..5)) {
        let text = format!(
            "[experiment]\nname = \"connectivity\"\n[seeds]\nmaster = {master}\nreplicas = {replicas}\n\
             [connectivity]\ndistance = {distance}\nboxes = {:?}\n",
            boxes.iter().map(|&(d, l)| [d, l]).collect::<Vec<_>>()
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&to_toml(&cfg)).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn csv_has_one_row_per_replica_and_point(replicas in 1u64..6, sides in proptest::collection::vec(3usize..6, 1..4)) {
        let mut sides = sides;
        sides.sort_unstable();
        sides.dedup();
        let boxes: Vec<[usize; 2]> = sides.iter().map(|&l| [1, l]).collect();
        let text = format!(
            "[experiment]\nname = \"connectivity\"\n[seeds]\nmaster = 1\nreplicas = {replicas}\n\
             [connectivity]\ndistance = 1\nboxes = {boxes:?}\n"
        );
        let records = run_connectivity_transition(&parse_config(&text).unwrap()).unwrap();
        let mut out = Vec::new();
        write_csv(&records, &mut out).unwrap();
        let lines = String::from_utf8(out).unwrap().lines().count();
        prop_assert_eq!(lines, 1 + replicas as usize * boxes.len());
    }
}

#[test]
fn future_and_past_are_dual_on_every_small_forest() {
    let mut graphs = vec![cycle_graph(3), cycle_graph(5), complete_graph(4), complete_graph(5), make_box(&BoxSpec::new(1, 3, Boundary::Wired)).unwrap()];
    graphs.extend((0..4).map(|s| small_graph(100 + s, 6)));
    let mut checked = 0;
    for g in &graphs {
        for f in all_oriented_forests(g) {
            assert!(future_past_dual(&f));
            checked += 1;
        }
    }
    assert!(checked > 1000, "{checked}");
}
