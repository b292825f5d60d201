//! Constructive colorings along the fabric rails.
//!
//! Net vertex `i` goes to rail position `i` (plus any skipped positions),
//! i.e. the sequence a1, b1, a2, b2, ... of a prism fabric.

use std::collections::BTreeSet;

use super::{route_edges, verify_homomorphism, Mapping, Strategy};
use crate::error::{Error, Result};
use crate::fabric::{kpp_rail_adjacent, Fabric};
use crate::netgraph::{DenseRepr, NetGraph};

fn not_applicable(msg: impl Into<String>) -> Error {
    Error::StrategyNotApplicable(msg.into())
}

/// Rail positions for every vertex; a vertex in `skips` leaves the position
/// in front of it empty.
fn rail_assignment(n: usize, fabric: &Fabric, skips: &BTreeSet<usize>) -> Option<Vec<usize>> {
    let rail = fabric.rail_order();
    let mut pos = 0;
    let mut out = Vec::with_capacity(n);
    for v in 0..n {
        if skips.contains(&v) {
            pos += 1;
        }
        out.push(*rail.get(pos)?);
        pos += 1;
    }
    Some(out)
}

fn finish(net: &NetGraph, fabric: &Fabric, assignment: Vec<usize>, strategy: Strategy) -> Result<Mapping> {
    if !verify_homomorphism(net, fabric, &assignment) {
        let bad = net
            .edges
            .iter()
            .find(|e| !fabric.has_link(assignment[e.src], assignment[e.dst]))
            .map(|e| format!(" (edge {} -> {} lands on non-adjacent cores)", e.src, e.dst))
            .unwrap_or_default();
        return Err(not_applicable(format!(
            "{} placement of {} on {} is not a homomorphism{bad}",
            strategy,
            net.name,
            fabric.descriptor()
        )));
    }
    route_edges(net, fabric, &assignment, strategy)
}

fn prism_unit(fabric: &Fabric) -> Result<usize> {
    fabric
        .unit_size()
        .ok_or_else(|| not_applicable(format!("{} is not a prism fabric", fabric.descriptor())))
}

pub fn strategy_path(net: &NetGraph, fabric: &Fabric) -> Result<Mapping> {
    if !net.is_path() {
        return Err(not_applicable(format!("{} is not a path", net.name)));
    }
    let a = rail_assignment(net.vertex_count(), fabric, &BTreeSet::new())
        .ok_or_else(|| not_applicable("fabric too small"))?;
    finish(net, fabric, a, Strategy::Path)
}

/// Paths with resampling triangles: every edge spans at most two temporal
/// steps, and a two-step edge closes a triangle with the vertex in between.
pub fn strategy_resnet(net: &NetGraph, fabric: &Fabric) -> Result<Mapping> {
    prism_unit(fabric)?;
    for e in &net.edges {
        match e.dst - e.src {
            1 => {}
            2 if net.edge(e.src, e.src + 1).is_some() && net.edge(e.src + 1, e.dst).is_some() => {}
            _ => {
                return Err(not_applicable(format!(
                    "edge {} -> {} is neither a path step nor part of a triangle",
                    e.src, e.dst
                )))
            }
        }
    }
    let a = rail_assignment(net.vertex_count(), fabric, &BTreeSet::new())
        .ok_or_else(|| not_applicable("fabric too small"))?;
    finish(net, fabric, a, Strategy::Resnet)
}

pub fn strategy_densenet(net: &NetGraph, fabric: &Fabric) -> Result<Mapping> {
    let unit = prism_unit(fabric)?;
    match net.dense_repr {
        None => return Err(not_applicable(format!("{} has no dense representation", net.name))),
        Some(DenseRepr::Path) if !net.is_path() => return Err(not_applicable("path representation is not a path")),
        Some(DenseRepr::Hybrid { unit_size }) if unit_size > unit => {
            return Err(not_applicable(format!(
                "hybrid representation for K{unit_size} units does not fit K{unit} units"
            )))
        }
        Some(DenseRepr::Complete) => {
            if let Some(e) = net.edges.iter().find(|e| !kpp_rail_adjacent(unit, e.src, e.dst)) {
                return Err(not_applicable(format!(
                    "complete representation: dense block spanning {} -> {} exceeds one K{unit}",
                    e.src, e.dst
                )));
            }
        }
        Some(_) => {}
    }
    let a = rail_assignment(net.vertex_count(), fabric, &BTreeSet::new())
        .ok_or_else(|| not_applicable("fabric too small"))?;
    finish(net, fabric, a, Strategy::Densenet)
}

/// Blocks joined by bipartite connectors. A connector whose sinks cannot
/// all reach its sources from the current rail parity is repaired once by
/// leaving a rail position empty at the entry of the block holding its
/// sources.
pub fn strategy_inception(net: &NetGraph, fabric: &Fabric) -> Result<Mapping> {
    prism_unit(fabric)?;
    if net.connectors.is_empty() {
        return Err(not_applicable(format!("{} has no bipartite connectors", net.name)));
    }
    let n = net.vertex_count();
    let mut skips = BTreeSet::new();
    let edges_ok = |a: &[usize], upto: usize| {
        net.edges
            .iter()
            .filter(|e| e.dst <= upto)
            .all(|e| fabric.has_link(a[e.src], a[e.dst]))
    };
    for (ci, c) in net.connectors.iter().enumerate() {
        let upto = c.sinks.iter().copied().max().unwrap_or(0);
        let a = rail_assignment(n, fabric, &skips).ok_or_else(|| not_applicable("fabric too small"))?;
        if edges_ok(&a, upto) {
            continue;
        }
        let entry = if ci == 0 {
            0
        } else {
            net.connectors[ci - 1].sinks.iter().copied().min().unwrap_or(0)
        };
        let colored = c.sinks.iter().copied().min().unwrap_or(0) + skips.len();
        let (m, k) = c.shape();
        let evidence = format!(
            "K_{{{m},{k}}} entered after an {} coloring of {colored} vertices",
            super::Parity::of(colored).as_str()
        );
        if !skips.insert(entry) {
            return Err(not_applicable(evidence));
        }
        let a = rail_assignment(n, fabric, &skips).ok_or_else(|| not_applicable("fabric too small"))?;
        if !edges_ok(&a, upto) {
            return Err(not_applicable(evidence));
        }
    }
    let a = rail_assignment(n, fabric, &skips).ok_or_else(|| not_applicable("fabric too small"))?;
    finish(net, fabric, a, Strategy::Inception)
}
