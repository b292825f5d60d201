//! Iterative H-coloring of a [`NetGraph`] onto a [`Fabric`].
//!
//! Net vertices are colored in temporal order; each one must land on a core
//! adjacent to the cores of all its already colored neighbours. Family
//! specific constructive strategies walk the fabric rails; anything else
//! goes through a budgeted depth-first search. Edges that do not land on a
//! fabric link are routed along shortest paths.

mod backtrack;
mod coloring;
mod strategies;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fabric::Fabric;
use crate::netgraph::{EdgeOrigin, Family, NetGraph};

pub use backtrack::{complete_greedily, strategy_backtrack};
pub use coloring::{coloring_trace, connector_colorable, rail_prefix_uncolored_neighbors, ColoringState, Parity};
pub use strategies::{strategy_densenet, strategy_inception, strategy_path, strategy_resnet};

/// Node expansions the backtracker may spend before giving up.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Auto,
    Path,
    Resnet,
    Densenet,
    Inception,
    Backtrack,
    /// Best partial coloring completed greedily; not a homomorphism search.
    Greedy,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Auto => "auto",
            Strategy::Path => "path",
            Strategy::Resnet => "resnet",
            Strategy::Densenet => "densenet",
            Strategy::Inception => "inception",
            Strategy::Backtrack => "backtrack",
            Strategy::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Strategy::Auto,
            "path" => Strategy::Path,
            "resnet" => Strategy::Resnet,
            "densenet" => Strategy::Densenet,
            "inception" => Strategy::Inception,
            "backtrack" => Strategy::Backtrack,
            _ => return Err(invalid(format!("unknown strategy `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub edge: (usize, usize),
    pub path: Vec<usize>,
    pub origin: EdgeOrigin,
}

impl Route {
    /// Hops taken by the transfer.
    pub fn len(&self) -> usize {
        self.path.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.path.len() < 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mapping {
    /// `assignment[v]` is the core of net vertex `v`.
    pub assignment: Vec<usize>,
    /// One route per net edge, in net edge order.
    pub routes: Vec<Route>,
    pub is_homomorphism: bool,
    pub strategy_used: Strategy,
    pub parity_trace: Vec<ColoringState>,
}

impl Mapping {
    pub fn max_route_len(&self) -> usize {
        self.routes.iter().map(Route::len).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> MappingJson {
        MappingJson {
            assignment: self.assignment.iter().copied().enumerate().collect(),
            routes: self
                .routes
                .iter()
                .map(|r| RouteJson {
                    edge: [r.edge.0, r.edge.1],
                    path: r.path.clone(),
                    origin: r.origin,
                })
                .collect(),
            is_homomorphism: self.is_homomorphism,
            strategy_used: self.strategy_used,
            parity_trace: self.parity_trace.iter().map(|s| s.parity).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingJson {
    pub assignment: Vec<(usize, usize)>,
    pub routes: Vec<RouteJson>,
    pub is_homomorphism: bool,
    pub strategy_used: Strategy,
    pub parity_trace: Vec<Parity>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteJson {
    pub edge: [usize; 2],
    pub path: Vec<usize>,
    pub origin: EdgeOrigin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The search space was exhausted, or a necessary condition fails.
    Impossible,
    /// The expansion budget ran out first.
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub reason: FailureReason,
    /// Cores of net vertices `0..colored_prefix.len()` in the deepest
    /// consistent partial coloring seen.
    pub colored_prefix: Vec<usize>,
    /// First net vertex that could not be colored.
    pub blocking_vertex: Option<usize>,
    pub expansions: u64,
    pub detail: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reason = match self.reason {
            FailureReason::Impossible => "no homomorphism exists",
            FailureReason::Timeout => "search budget exhausted",
        };
        write!(f, "{reason} after {} expansions", self.expansions)?;
        if let Some(v) = self.blocking_vertex {
            write!(f, "; blocked at net vertex {v}")?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

pub type Outcome = std::result::Result<Mapping, Failure>;

/// Colors `net` onto `fabric` with the requested strategy.
///
/// Constructive strategies report [`Error::StrategyNotApplicable`] when the
/// net does not have the shape they rely on; `auto` then falls back to the
/// backtracker.
pub fn h_color(net: &NetGraph, fabric: &Fabric, strategy: Strategy, budget: u64) -> Result<Outcome> {
    if fabric.vertex_count() < net.vertex_count() {
        return Err(invalid(format!(
            "fabric {} has {} cores but {} needs {}",
            fabric.descriptor(),
            fabric.vertex_count(),
            net.name,
            net.vertex_count()
        )));
    }
    let constructive = match strategy {
        Strategy::Path => return strategy_path(net, fabric).map(Ok),
        Strategy::Resnet => return strategy_resnet(net, fabric).map(Ok),
        Strategy::Densenet => return strategy_densenet(net, fabric).map(Ok),
        Strategy::Inception => return strategy_inception(net, fabric).map(Ok),
        Strategy::Backtrack | Strategy::Greedy => return strategy_backtrack(net, fabric, budget),
        Strategy::Auto => match net.family {
            _ if net.is_path() => strategy_path(net, fabric),
            Family::Resnet => strategy_resnet(net, fabric),
            Family::Densenet => strategy_densenet(net, fabric),
            Family::Inception(_) => strategy_inception(net, fabric),
            Family::Feedforward | Family::Custom => return strategy_backtrack(net, fabric, budget),
        },
    };
    match constructive {
        Ok(m) => Ok(Ok(m)),
        Err(Error::StrategyNotApplicable(_)) => strategy_backtrack(net, fabric, budget),
        Err(e) => Err(e),
    }
}

/// A routed placement for every outcome: homomorphisms as they are, failures
/// completed greedily.
pub fn place_and_route(net: &NetGraph, fabric: &Fabric, strategy: Strategy, budget: u64) -> Result<Mapping> {
    match h_color(net, fabric, strategy, budget)? {
        Ok(m) => Ok(m),
        Err(f) => complete_and_route(net, fabric, &f.colored_prefix),
    }
}

/// Completes a partial coloring greedily and routes it. Cores skipped by the
/// partial coloring stay free until the end, so late vertices may land far
/// from their neighbours.
pub fn complete_and_route(net: &NetGraph, fabric: &Fabric, prefix: &[usize]) -> Result<Mapping> {
    route_edges(net, fabric, &complete_greedily(net, fabric, prefix)?, Strategy::Greedy)
}

/// True iff `assignment` is injective and every net edge lands on a link.
pub fn verify_homomorphism(net: &NetGraph, fabric: &Fabric, assignment: &[usize]) -> bool {
    if assignment.len() != net.vertex_count() {
        return false;
    }
    let mut used = vec![false; fabric.vertex_count()];
    for &c in assignment {
        if c >= used.len() || std::mem::replace(&mut used[c], true) {
            return false;
        }
    }
    net.edges
        .iter()
        .all(|e| fabric.has_link(assignment[e.src], assignment[e.dst]))
}

/// Routes every net edge along a shortest fabric path; ties go to the
/// smallest core id.
pub fn route_edges(net: &NetGraph, fabric: &Fabric, assignment: &[usize], strategy: Strategy) -> Result<Mapping> {
    if assignment.len() != net.vertex_count() {
        return Err(invalid("assignment does not cover the net"));
    }
    let mut used = vec![false; fabric.vertex_count()];
    for &c in assignment {
        if c >= used.len() || std::mem::replace(&mut used[c], true) {
            return Err(invalid(format!("assignment is not injective at core {c}")));
        }
    }
    let mut routes = Vec::with_capacity(net.edge_count());
    for e in &net.edges {
        let (from, to) = (assignment[e.src], assignment[e.dst]);
        let path = fabric
            .graph()
            .shortest_path(from, to)
            .ok_or(Error::RoutingImpossible { from, to })?;
        routes.push(Route {
            edge: (e.src, e.dst),
            path,
            origin: e.origin(),
        });
    }
    let is_homomorphism = routes.iter().all(|r| r.len() == 1);
    Ok(Mapping {
        parity_trace: coloring_trace(fabric, assignment),
        assignment: assignment.to_vec(),
        routes,
        is_homomorphism,
        strategy_used: strategy,
    })
}
