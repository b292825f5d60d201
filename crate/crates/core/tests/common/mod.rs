//! Oracles and generators shared by the integration tests. Everything here is
//! written against first principles, not against library helpers.
#![allow(dead_code)]

use std::collections::BTreeSet;

use prismfab::UGraph;
use proptest::prelude::*;

/// Edge set of a prism fabric from its definition: rail positions `i < j`
/// are linked iff some unit window `[2u, 2u + n)` holds both.
pub fn kpp_edges_by_windows(n: usize, cores: usize) -> BTreeSet<(usize, usize)> {
    let units = (cores.saturating_sub(n)).div_ceil(2) + 1;
    let mut out = BTreeSet::new();
    for u in 0..units {
        let w: Vec<usize> = (2 * u..2 * u + n).collect();
        for (a, &i) in w.iter().enumerate() {
            for &j in &w[a + 1..] {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Exhaustive search over injective assignments in plain index order.
/// Partial assignments are abandoned as soon as an edge between two placed
/// vertices misses the fabric, which keeps the enumeration complete.
pub fn brute_force_homomorphism(nv: usize, edges: &[(usize, usize)], fabric: &UGraph) -> Option<Vec<usize>> {
    fn go(
        v: usize,
        nv: usize,
        edges: &[(usize, usize)],
        fabric: &UGraph,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if v == nv {
            return true;
        }
        for c in 0..used.len() {
            if used[c] {
                continue;
            }
            let ok = edges.iter().all(|&(a, b)| {
                let (lo, hi) = (a.min(b), a.max(b));
                hi != v || fabric.has_edge(assign[lo], c)
            });
            if !ok {
                continue;
            }
            used[c] = true;
            assign.push(c);
            if go(v + 1, nv, edges, fabric, assign, used) {
                return true;
            }
            assign.pop();
            used[c] = false;
        }
        false
    }
    let mut assign = Vec::new();
    let mut used = vec![false; fabric.vertex_count()];
    go(0, nv, edges, fabric, &mut assign, &mut used).then_some(assign)
}

/// Connected graph on `0..n`: a random spanning tree plus extra edges.
pub fn connected_graph(max_n: usize) -> impl Strategy<Value = UGraph> {
    (1..=max_n).prop_flat_map(|n| {
        let parents = proptest::collection::vec(any::<prop::sample::Index>(), n.saturating_sub(1));
        let extra = proptest::collection::vec((0..n, 0..n), 0..=2 * n);
        (Just(n), parents, extra).prop_map(|(n, parents, extra)| {
            let mut g = UGraph::with_vertices(n);
            for (i, p) in parents.iter().enumerate() {
                g.add_edge(i + 1, p.index(i + 1));
            }
            for (u, v) in extra {
                g.add_edge(u, v);
            }
            g
        })
    })
}

/// Arbitrary undirected graph on up to `max_n` vertices with sparse ids.
pub fn sparse_graph(max_n: usize) -> impl Strategy<Value = (UGraph, Vec<usize>)> {
    (
        proptest::collection::btree_set(0usize..4 * max_n, 2..=max_n),
        proptest::collection::vec(
            (any::<prop::sample::Index>(), any::<prop::sample::Index>()),
            0..3 * max_n,
        ),
    )
        .prop_map(|(ids, pairs)| {
            let ids: Vec<usize> = ids.into_iter().collect();
            let mut g = UGraph::new();
            for &v in &ids {
                g.add_vertex(v);
            }
            for (a, b) in pairs {
                g.add_edge(ids[a.index(ids.len())], ids[b.index(ids.len())]);
            }
            (g, ids)
        })
}

/// Text of a random, valid layer description: every layer after the first
/// has a feedforward parent, with extra residual links, optional resampler
/// layers and at most one concatenation.
pub fn arch_text(max_layers: usize) -> impl Strategy<Value = String> {
    (2..=max_layers).prop_flat_map(|n| {
        let layers = proptest::collection::vec((0u32..4, 1u32..=2, proptest::bool::weighted(0.15)), n);
        let parents = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
        let residuals = proptest::collection::vec((0..n, 0..n), 0..n);
        let concat = proptest::option::of((1..n, any::<u16>(), any::<u16>()));
        (Just(n), layers, parents, residuals, concat).prop_map(|(n, layers, parents, residuals, concat)| {
            let mut text = String::from("network random\n");
            for (i, (c, stride, resample)) in layers.iter().enumerate() {
                text += &format!("layer l{i} channels={} stride={stride}", 8 << c);
                if *resample && i > 0 {
                    text += " kernel=1 resample";
                }
                text.push('\n');
            }
            for (i, p) in parents.iter().enumerate() {
                text += &format!("link l{} -> l{}\n", p.index(i + 1), i + 1);
            }
            for (a, b) in residuals {
                if a < b {
                    text += &format!("link l{a} -> l{b} residual\n");
                }
            }
            if let Some((split, sm, tm)) = concat {
                let src: Vec<String> = (0..split)
                    .filter(|i| sm >> (i % 16) & 1 == 1)
                    .map(|i| format!("l{i}"))
                    .collect();
                let dst: Vec<String> = (split..n)
                    .filter(|i| tm >> (i % 16) & 1 == 1)
                    .map(|i| format!("l{i}"))
                    .collect();
                if !src.is_empty() && !dst.is_empty() {
                    text += &format!("concat {{{}}} -> {{{}}}\n", src.join(" "), dst.join(" "));
                }
            }
            text
        })
    })
}
