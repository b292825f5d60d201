//! Undirected simple graph used as the substrate for fabrics.
//!
//! Vertices carry arbitrary integer ids so that vertex identification can
//! merge vertices without renumbering; [`UGraph::compact`] restores a dense
//! `0..n` numbering once construction is finished.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UGraph {
    adj: BTreeMap<usize, BTreeSet<usize>>,
}

impl UGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph with vertices `0..n` and no edges.
    pub fn with_vertices(n: usize) -> Self {
        UGraph {
            adj: (0..n).map(|v| (v, BTreeSet::new())).collect(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::with_vertices(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn add_vertex(&mut self, v: usize) {
        self.adj.entry(v).or_default();
    }

    /// Adds the undirected edge `u-v`. Self-loops are ignored so the graph
    /// stays simple; parallel edges collapse by construction.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v {
            return;
        }
        self.adj.entry(u).or_default().insert(v);
        self.adj.entry(v).or_default().insert(u);
    }

    pub fn contains(&self, v: usize) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj.get(&u).is_some_and(|n| n.contains(&v))
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj.get(&v).into_iter().flat_map(|n| n.iter().copied())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj.get(&v).map_or(0, BTreeSet::len)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.adj.keys().copied()
    }

    /// Edges as `(u, v)` pairs with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adj
            .iter()
            .flat_map(|(&u, n)| n.range(u + 1..).map(move |&v| (u, v)))
            .collect()
    }

    /// True when no vertex lists itself and adjacency is symmetric.
    pub fn is_simple(&self) -> bool {
        self.adj
            .iter()
            .all(|(&u, n)| !n.contains(&u) && n.iter().all(|v| self.adj.get(v).is_some_and(|m| m.contains(&u))))
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.adj.keys().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen.len() == self.adj.len()
    }

    /// Disjoint union; vertices of `other` are shifted by `offset`.
    pub fn disjoint_union(&self, other: &UGraph, offset: usize) -> Result<UGraph> {
        let mut out = self.clone();
        out.absorb(other, offset)?;
        Ok(out)
    }

    pub(crate) fn absorb(&mut self, other: &UGraph, offset: usize) -> Result<()> {
        for v in other.vertices() {
            if self.contains(v + offset) {
                return Err(invalid(format!("vertex {} collides in disjoint union", v + offset)));
            }
            self.add_vertex(v + offset);
        }
        for (u, v) in other.edges() {
            self.add_edge(u + offset, v + offset);
        }
        Ok(())
    }

    /// Vertex identification `u ⊙ v`: `v` is merged into `u`. The merged
    /// vertex keeps id `u` and the union of both neighbourhoods; duplicate
    /// edges collapse and an existing `u-v` edge is dropped.
    pub fn identify(&self, u: usize, v: usize) -> Result<UGraph> {
        let mut out = self.clone();
        out.merge_into(u, v)?;
        Ok(out)
    }

    pub(crate) fn merge_into(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(invalid("cannot identify a vertex with itself"));
        }
        for w in [u, v] {
            if !self.contains(w) {
                return Err(Error::NotFound(format!("vertex {w}")));
            }
        }
        let merged = self.adj.remove(&v).unwrap_or_default();
        for x in merged {
            if let Some(n) = self.adj.get_mut(&x) {
                n.remove(&v);
            }
            self.add_edge(u, x);
        }
        Ok(())
    }

    /// Renumbers vertices according to `order`, which must list every vertex
    /// exactly once; vertex `order[i]` becomes `i`.
    pub fn compact(&self, order: &[usize]) -> Result<UGraph> {
        if order.len() != self.vertex_count() {
            return Err(invalid("compaction order does not cover the graph"));
        }
        let index: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        if index.len() != order.len() || order.iter().any(|v| !self.contains(*v)) {
            return Err(invalid("compaction order is not a permutation of the vertices"));
        }
        let mut out = UGraph::with_vertices(order.len());
        for (u, v) in self.edges() {
            out.add_edge(index[&u], index[&v]);
        }
        Ok(out)
    }

    /// Breadth-first hop distances from `src`; `None` marks unreachable
    /// vertices. Requires dense ids `0..n`.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let n = self.vertex_count();
        let mut dist = vec![None; n];
        if src >= n {
            return dist;
        }
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for v in self.neighbors(u) {
                if v < n && dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path from `src` to `dst`, breaking ties towards the smallest
    /// predecessor id. Requires dense ids.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        let dist = self.bfs_distances(dst);
        dist.get(src).copied().flatten()?;
        let mut path = vec![src];
        let mut cur = src;
        while cur != dst {
            let d = dist[cur]?;
            cur = self
                .neighbors(cur)
                .find(|&w| dist.get(w).copied().flatten() == Some(d - 1))?;
            path.push(cur);
        }
        Some(path)
    }

    /// Induced subgraph is complete.
    pub fn is_clique(&self, vs: &[usize]) -> bool {
        vs.iter()
            .enumerate()
            .all(|(i, &u)| vs[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }
}
