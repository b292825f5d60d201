//! Consolidation of an [`ArchSpec`] into a [`NetGraph`].
//!
//! * Only convolutional layers become vertices.
//! * A residual link is not distinguished from a link into the input of the
//!   layer it skips over: it rides the feedforward edge into that layer, and
//!   the skipped layer forwards it from its input memory to the destination.
//!   Parallel links merge into one edge.
//! * A concatenation of `m` layers into `n` layers becomes `K_{m,n}`.
//! * Short parallel branches of a concatenation hop their output through the
//!   temporally next vertex until a branch of full latency is reached.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{ArchSpec, ConnKind, Connector, EdgeOrigin, EdgeSet, Flow, NetGraph, NetVertex};
use crate::error::{invalid, Result};

pub fn consolidate(arch: &ArchSpec) -> Result<NetGraph> {
    let pre = consolidate_without_hops(arch)?;
    Ok(apply_hop_transform(&pre))
}

/// Consolidation up to (but excluding) the hop rewrite.
pub(crate) fn consolidate_without_hops(arch: &ArchSpec) -> Result<NetGraph> {
    arch.validate()?;
    let index = arch.layer_index();
    let n = arch.layers.len();
    let channels = |v: usize| arch.layers[v].out_channels;
    let own_origin = |v: usize, default: EdgeOrigin| {
        if arch.layers[v].is_resampler() {
            EdgeOrigin::Resample
        } else {
            default
        }
    };
    let flow = |source: usize, origin: EdgeOrigin, consumer: usize| Flow {
        source,
        channels: channels(source),
        origin,
        consumers: BTreeSet::from([consumer]),
    };

    let mut edges = EdgeSet::default();
    let mut ff_succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut residuals = Vec::new();
    for c in &arch.connections {
        let (s, t) = (index[c.src.as_str()], index[c.dst.as_str()]);
        match c.kind {
            ConnKind::Feedforward => {
                edges.add(s, t, flow(s, own_origin(s, EdgeOrigin::Feedforward), t));
                ff_succ[s].push(t);
            }
            ConnKind::ConcatMember => {
                edges.add(s, t, flow(s, own_origin(s, EdgeOrigin::Concat), t));
                ff_succ[s].push(t);
            }
            ConnKind::Residual => residuals.push((s, t)),
        }
    }
    for g in &arch.concat_groups {
        for s in &g.sources {
            for t in &g.sinks {
                let (s, t) = (index[s.as_str()], index[t.as_str()]);
                edges.add(s, t, flow(s, own_origin(s, EdgeOrigin::Concat), t));
            }
        }
    }
    for s in &mut ff_succ {
        s.sort_unstable();
        s.dedup();
    }

    // carriers must precede the destination in the order of the unridden
    // graph, otherwise two residuals can ride into a cycle
    let mut direct = edges.clone();
    for &(s, t) in &residuals {
        direct.add(s, t, flow(s, EdgeOrigin::Residual, t));
    }
    let before = temporal_rank(&direct, n);
    for (s, t) in residuals {
        let f = flow(s, own_origin(s, EdgeOrigin::Residual), t);
        if edges.contains(s, t) {
            edges.add(s, t, f);
            continue;
        }
        let carrier = ff_succ[s].iter().copied().find(|&q| q != t && before[q] < before[t]);
        match carrier {
            Some(q) => edges.add(q, t, f),
            None => edges.add(s, t, f),
        }
    }

    let depth = longest_path_depth(&edges, n);
    let rank = temporal_rank(&edges, n);
    let mut order = vec![0; n];
    for (v, &r) in rank.iter().enumerate() {
        order[r] = v;
    }

    let mut renumbered = EdgeSet::default();
    for e in edges.into_edges() {
        for mut f in e.flows {
            f.source = rank[f.source];
            f.consumers = f.consumers.into_iter().map(|c| rank[c]).collect();
            renumbered.add(rank[e.src], rank[e.dst], f);
        }
    }

    let vertices = order
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let l = &arch.layers[v];
            NetVertex {
                id: i,
                name: l.name.clone(),
                out_channels: l.out_channels,
                stride: l.stride,
                kernel: l.kernel,
                is_resampler: l.is_resampler(),
                depth: depth[v],
            }
        })
        .collect();

    let connectors = arch
        .concat_groups
        .iter()
        .map(|g| {
            let mut sources: Vec<usize> = g.sources.iter().map(|s| rank[index[s.as_str()]]).collect();
            let mut sinks: Vec<usize> = g.sinks.iter().map(|s| rank[index[s.as_str()]]).collect();
            sources.sort_unstable();
            sinks.sort_unstable();
            Connector { sources, sinks }
        })
        .collect();

    for h in &arch.hop_overrides {
        let (from, via) = (rank[index[h.from.as_str()]], rank[index[h.via.as_str()]]);
        if via <= from {
            return Err(invalid(format!(
                "hop override `{}` via `{}` does not move forward in time",
                h.from, h.via
            )));
        }
    }

    Ok(NetGraph {
        name: arch.name.clone(),
        family: arch.family,
        dense_repr: None,
        vertices,
        edges: renumbered.into_edges(),
        connectors,
        arch: Arc::new(arch.clone()),
    })
}

/// Position of each vertex in temporal order: longest-path depth, ties by
/// declaration order.
fn temporal_rank(edges: &EdgeSet, n: usize) -> Vec<usize> {
    let depth = longest_path_depth(edges, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (depth[v], v));
    let mut rank = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    rank
}

fn longest_path_depth(edges: &EdgeSet, n: usize) -> Vec<usize> {
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0; n];
    for (s, t) in edges.pairs() {
        succ[s].push(t);
        indeg[t] += 1;
    }
    let mut depth = vec![0; n];
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    while let Some(v) = ready.pop() {
        for &t in &succ[v] {
            depth[t] = depth[t].max(depth[v] + 1);
            indeg[t] -= 1;
            if indeg[t] == 0 {
                ready.push(t);
            }
        }
    }
    depth
}

/// Reroutes the output of every concatenation source that finishes before
/// the slowest source of its group: the activations hop from vertex to
/// temporally next vertex until they reach a source on the critical path,
/// which then delivers them to the sinks together with its own output.
/// Connectors are narrowed to their critical sources. Idempotent.
pub fn apply_hop_transform(g: &NetGraph) -> NetGraph {
    let n = g.vertex_count();
    let index: BTreeMap<&str, usize> = g.vertices.iter().map(|v| (v.name.as_str(), v.id)).collect();
    let overrides: BTreeMap<usize, usize> = g
        .arch
        .hop_overrides
        .iter()
        .filter_map(|h| Some((*index.get(h.from.as_str())?, *index.get(h.via.as_str())?)))
        .collect();

    let mut edges = EdgeSet::from_edges(&g.edges);
    let mut connectors = Vec::with_capacity(g.connectors.len());
    for c in &g.connectors {
        let deepest = c.sources.iter().map(|&s| g.vertices[s].depth).max().unwrap_or(0);
        let critical: Vec<usize> = c
            .sources
            .iter()
            .copied()
            .filter(|&s| g.vertices[s].depth == deepest)
            .collect();
        let last_critical = critical.last().copied().unwrap_or(0);
        let sinks: BTreeSet<usize> = c.sinks.iter().copied().collect();
        for &s in c.sources.iter().filter(|&&s| g.vertices[s].depth < deepest) {
            for &k in &c.sinks {
                edges.remove_source(s, k, s);
            }
            let hop = |consumers: BTreeSet<usize>| Flow {
                source: s,
                channels: g.vertices[s].out_channels,
                origin: EdgeOrigin::Hop,
                consumers,
            };
            let mut cur = s;
            let mut via = overrides
                .get(&s)
                .copied()
                .filter(|&v| v > s && v <= last_critical)
                .unwrap_or(s + 1);
            while via < n {
                edges.add(cur, via, hop(sinks.clone()));
                cur = via;
                if critical.contains(&cur) {
                    break;
                }
                via = cur + 1;
            }
            for &k in &c.sinks {
                edges.add(cur, k, hop(BTreeSet::from([k])));
            }
        }
        connectors.push(Connector {
            sources: critical,
            sinks: c.sinks.clone(),
        });
    }

    NetGraph {
        edges: edges.into_edges(),
        connectors,
        ..g.clone()
    }
}
