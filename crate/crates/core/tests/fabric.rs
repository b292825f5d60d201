mod common;

use std::collections::BTreeSet;

use prismfab::fabric::{build_kpp, build_mesh, fabric_stats, kpp_rail_adjacent, MeshShape};
use proptest::prelude::*;

#[test]
fn kpp_matches_window_definition() {
    for n in [4, 6, 8] {
        for cores in (n..=80).step_by(2) {
            let f = build_kpp(n, cores).unwrap();
            let got: BTreeSet<_> = f.graph().edges().into_iter().collect();
            assert_eq!(got, common::kpp_edges_by_windows(n, cores), "K{n} chain, {cores} cores");
        }
    }
}

#[test]
fn every_core_sits_in_a_recorded_k6() {
    for cores in 6..=200 {
        let f = build_kpp(6, cores).unwrap();
        let g = f.graph();
        assert!(g.is_simple() && g.is_connected());
        for v in g.vertices() {
            let ok = f.units().iter().any(|u| {
                u.contains(&v)
                    && u.len() == 6
                    && u.iter()
                        .enumerate()
                        .flat_map(|(i, &a)| u[i + 1..].iter().map(move |&b| (a, b)))
                        .filter(|&(a, b)| g.has_edge(a, b))
                        .count()
                        == 15
            });
            assert!(ok, "core {v} of {cores}");
        }
    }
}

#[test]
fn edge_count_grows_by_a_constant_per_unit() {
    for n in [4, 6, 8, 10] {
        let step = n * (n - 1) / 2 - (n - 2) * (n - 3) / 2;
        let edges: Vec<usize> = (1..=20)
            .map(|m| build_kpp(n, n + 2 * (m - 1)).unwrap().edge_count())
            .collect();
        assert_eq!(edges[0], n * (n - 1) / 2);
        for w in edges.windows(2) {
            assert_eq!(w[1] - w[0], step, "K{n}");
        }
    }
}

#[test]
fn construction_is_prefix_stable() {
    for cores in (8..=60).step_by(2) {
        let big = build_kpp(6, cores).unwrap();
        let small = build_kpp(6, cores - 2).unwrap();
        let trimmed: Vec<_> = big
            .graph()
            .edges()
            .into_iter()
            .filter(|&(_, v)| v < cores - 2)
            .collect();
        assert_eq!(small.graph().edges(), trimmed);
    }
}

#[test]
fn rail_adjacency_agrees_with_the_graph() {
    for n in [4, 6, 8] {
        let f = build_kpp(n, 40).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                assert_eq!(kpp_rail_adjacent(n, i, j), f.has_link(i, j), "K{n} {i} {j}");
            }
        }
    }
}

#[test]
fn mesh_stats() {
    let s = fabric_stats(&build_mesh(MeshShape::new(4, 10).unwrap()));
    assert_eq!(s.diameter, 3 + 9);
    assert_eq!(s.edge_count, 4 * 9 + 3 * 10);
    let s = fabric_stats(&build_kpp(6, 40).unwrap());
    assert!(s.min_degree >= 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn identification_keeps_graphs_simple((g, ids) in common::sparse_graph(12), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let (u, v) = (ids[a.index(ids.len())], ids[b.index(ids.len())]);
        prop_assume!(u != v);
        let h = g.identify(u, v).unwrap();
        prop_assert!(h.is_simple());
        prop_assert!(!h.contains(v));
        prop_assert_eq!(h.vertex_count(), g.vertex_count() - 1);
        let expected: BTreeSet<usize> = g.neighbors(u).chain(g.neighbors(v)).filter(|&w| w != u && w != v).collect();
        prop_assert_eq!(h.neighbors(u).collect::<BTreeSet<_>>(), expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kpp_is_simple_and_connected(half in 2usize..8, cores in 4usize..200) {
        let n = 2 * half;
        prop_assume!(cores >= n);
        let f = build_kpp(n, cores).unwrap();
        prop_assert!(f.graph().is_simple() && f.graph().is_connected());
        prop_assert!(f.vertex_count() >= cores && f.vertex_count() <= cores + 1);
    }
}
