//! Depth-first search for an injective homomorphism, in temporal order.

use super::{route_edges, Failure, FailureReason, Outcome, Strategy};
use crate::error::{invalid, Result};
use crate::fabric::Fabric;
use crate::graph::UGraph;
use crate::netgraph::NetGraph;

/// Budget spent on finding a good partial coloring when a homomorphism is
/// already ruled out.
const PARTIAL_BUDGET: u64 = 100_000;

struct Search<'a> {
    fabric: &'a UGraph,
    fab_deg: Vec<usize>,
    /// Neighbours colored before each net vertex.
    earlier: Vec<Vec<usize>>,
    /// Neighbours colored after each net vertex.
    later: Vec<usize>,
    assign: Vec<usize>,
    used: Vec<bool>,
    expansions: u64,
    budget: u64,
    best: Vec<usize>,
    timed_out: bool,
}

impl Search<'_> {
    fn candidates(&self, v: usize) -> Vec<usize> {
        let fits = |c: usize| {
            !self.used[c]
                && self.fab_deg[c] >= self.earlier[v].len() + self.later[v]
                && self.fabric.neighbors(c).filter(|&w| !self.used[w]).count() >= self.later[v]
        };
        let mut out: Vec<usize> = match self.earlier[v].first() {
            Some(&p) => self
                .fabric
                .neighbors(self.assign[p])
                .filter(|&c| fits(c))
                .filter(|&c| {
                    self.earlier[v][1..]
                        .iter()
                        .all(|&q| self.fabric.has_edge(self.assign[q], c))
                })
                .collect(),
            None => (0..self.used.len()).filter(|&c| fits(c)).collect(),
        };
        out.sort_by_key(|&c| (std::cmp::Reverse(self.fab_deg[c]), c));
        out
    }

    fn dfs(&mut self, v: usize) -> bool {
        if v > self.best.len() {
            self.best = self.assign.clone();
        }
        if v == self.earlier.len() {
            return true;
        }
        for c in self.candidates(v) {
            self.expansions += 1;
            if self.expansions > self.budget {
                self.timed_out = true;
                return false;
            }
            self.assign.push(c);
            self.used[c] = true;
            if self.dfs(v + 1) {
                return true;
            }
            self.assign.pop();
            self.used[c] = false;
            if self.timed_out {
                return false;
            }
        }
        false
    }
}

fn is_bipartite(n: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> bool {
    let mut side: Vec<Option<bool>> = vec![None; n];
    for s in 0..n {
        if side[s].is_some() {
            continue;
        }
        side[s] = Some(false);
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            let su = side[u].unwrap_or(false);
            for w in neighbors(u) {
                match side[w] {
                    None => {
                        side[w] = Some(!su);
                        stack.push(w);
                    }
                    Some(sw) if sw == su => return false,
                    Some(_) => {}
                }
            }
        }
    }
    true
}

/// Necessary conditions whose violation proves that no homomorphism exists.
fn obstruction(net: &NetGraph, fabric: &Fabric) -> Option<String> {
    let g = fabric.graph();
    let n = net.vertex_count();
    let net_deg = (0..n).map(|v| net.neighbors(v).len()).max().unwrap_or(0);
    let fab_deg = g.vertices().map(|c| g.degree(c)).max().unwrap_or(0);
    if net_deg > fab_deg {
        return Some(format!("net degree {net_deg} exceeds fabric degree {fab_deg}"));
    }
    let fabric_bip = is_bipartite(fabric.vertex_count(), |c| g.neighbors(c).collect());
    if fabric_bip && !is_bipartite(n, |v| net.neighbors(v).into_iter().collect()) {
        return Some("net has an odd cycle but the fabric is bipartite".into());
    }
    None
}

/// Exhaustive search below `budget` node expansions. Candidates must be
/// adjacent to the cores of every colored neighbour and keep enough free
/// neighbours for the uncolored ones; they are tried by decreasing degree,
/// then by id, so the first solution found is deterministic.
pub fn strategy_backtrack(net: &NetGraph, fabric: &Fabric, budget: u64) -> Result<Outcome> {
    let n = net.vertex_count();
    if fabric.vertex_count() < n {
        return Err(invalid("fabric has fewer cores than the net has vertices"));
    }
    let g = fabric.graph();
    let mut earlier = vec![Vec::new(); n];
    let mut later = vec![0; n];
    for v in 0..n {
        for w in net.neighbors(v) {
            if w < v {
                earlier[v].push(w);
            } else {
                later[v] += 1;
            }
        }
    }
    let blocked = obstruction(net, fabric);
    let mut s = Search {
        fabric: g,
        fab_deg: (0..fabric.vertex_count()).map(|c| g.degree(c)).collect(),
        earlier,
        later,
        assign: Vec::with_capacity(n),
        used: vec![false; fabric.vertex_count()],
        expansions: 0,
        budget: if blocked.is_some() {
            budget.min(PARTIAL_BUDGET)
        } else {
            budget
        },
        best: Vec::new(),
        timed_out: false,
    };
    if s.dfs(0) {
        return route_edges(net, fabric, &s.assign, Strategy::Backtrack).map(Ok);
    }
    let reason = if blocked.is_none() && s.timed_out {
        FailureReason::Timeout
    } else {
        FailureReason::Impossible
    };
    Ok(Err(Failure {
        reason,
        blocking_vertex: Some(s.best.len()),
        colored_prefix: s.best,
        expansions: s.expansions.min(s.budget),
        detail: blocked.unwrap_or_default(),
    }))
}

/// Extends a partial coloring to every net vertex: each remaining vertex,
/// in temporal order, takes the free core that minimises the longest and
/// then the total distance to its colored neighbours, then the distance to
/// the previous vertex, then the core id.
pub fn complete_greedily(net: &NetGraph, fabric: &Fabric, prefix: &[usize]) -> Result<Vec<usize>> {
    let n = net.vertex_count();
    let cores = fabric.vertex_count();
    if cores < n || prefix.len() > n {
        return Err(invalid("fabric has fewer cores than the net has vertices"));
    }
    let g = fabric.graph();
    let dist: Vec<Vec<usize>> = (0..cores)
        .map(|c| {
            g.bfs_distances(c)
                .into_iter()
                .map(|d| d.unwrap_or(usize::MAX / 4))
                .collect()
        })
        .collect();
    let mut assign = prefix.to_vec();
    let mut used = vec![false; cores];
    for &c in prefix {
        used[c] = true;
    }
    for v in prefix.len()..n {
        let placed: Vec<usize> = net
            .neighbors(v)
            .into_iter()
            .filter(|&w| w < v)
            .map(|w| assign[w])
            .collect();
        let prev = v.checked_sub(1).map(|p| assign[p]);
        let best = (0..cores)
            .filter(|&c| !used[c])
            .min_by_key(|&c| {
                let max = placed.iter().map(|&p| dist[p][c]).max().unwrap_or(0);
                let sum: usize = placed.iter().map(|&p| dist[p][c]).sum();
                (max, sum, prev.map_or(0, |p| dist[p][c]), c)
            })
            .ok_or_else(|| invalid("no free core left"))?;
        used[best] = true;
        assign.push(best);
    }
    Ok(assign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::{build_mesh, MeshShape};
    use crate::netgraph::{consolidate, gen_feedforward, parse_archspec};

    fn triangle() -> NetGraph {
        consolidate(
            &parse_archspec(
                "layer a channels=1 stride=1\nlayer b channels=1 stride=1\nlayer c channels=1 stride=1\n\
                 link a -> b\nlink b -> c\nlink a -> c\n",
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn triangle_on_square_mesh_is_impossible() {
        let f = build_mesh(MeshShape::new(2, 2).unwrap());
        let out = strategy_backtrack(&triangle(), &f, 1_000).unwrap();
        let fail = out.unwrap_err();
        assert_eq!(fail.reason, FailureReason::Impossible);
        assert_eq!(fail.colored_prefix.len(), 2);
        assert_eq!(fail.blocking_vertex, Some(2));
    }

    #[test]
    fn path_into_mesh() {
        let f = build_mesh(MeshShape::new(3, 3).unwrap());
        let net = consolidate(&gen_feedforward(9, 4).unwrap()).unwrap();
        let m = strategy_backtrack(&net, &f, 1_000_000).unwrap().unwrap();
        assert!(m.is_homomorphism);
    }

    #[test]
    fn budget_exhaustion_is_timeout() {
        // path of 9 into 3x3 needs some backtracking from the corner choice
        let f = build_mesh(MeshShape::new(3, 3).unwrap());
        let net = consolidate(&gen_feedforward(9, 4).unwrap()).unwrap();
        let fail = strategy_backtrack(&net, &f, 3).unwrap().unwrap_err();
        assert_eq!(fail.reason, FailureReason::Timeout);
    }

    #[test]
    fn greedy_completion_is_injective() {
        let f = build_mesh(MeshShape::new(2, 3).unwrap());
        let net = triangle();
        let a = complete_greedily(&net, &f, &[0]).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[0], 0);
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 3);
    }
}
