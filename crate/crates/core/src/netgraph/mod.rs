//! Consolidated directed-graph representation of CNNs.
//!
//! Vertices are convolutional layers only; every edge is a physical
//! activation channel between two layers and carries one or more [`Flow`]s,
//! so that merged residual links and forwarded (hopped) activations remain
//! visible to bandwidth accounting even though the graph stays simple.

mod archspec;
mod consolidate;
mod generators;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use archspec::{
    parse_archspec, ArchBuilder, ArchSpec, ConcatGroup, ConnKind, Connection, Family, HopOverride, InceptionVersion,
    LayerSpec, Preproc,
};
pub use consolidate::{apply_hop_transform, consolidate};
pub use generators::{
    alexnet, densenet201, gen_densenet, gen_densenet_with, gen_feedforward, gen_inception, gen_resnet,
    inception_blocks, BlockShape, DenseConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeOrigin {
    Feedforward,
    Residual,
    Resample,
    Concat,
    Hop,
}

impl EdgeOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeOrigin::Feedforward => "feedforward",
            EdgeOrigin::Residual => "residual",
            EdgeOrigin::Resample => "resample",
            EdgeOrigin::Concat => "concat",
            EdgeOrigin::Hop => "hop",
        }
    }
}

/// Activations of one source layer travelling over an edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub source: usize,
    pub channels: u32,
    pub origin: EdgeOrigin,
    /// Layers that finally consume these activations.
    pub consumers: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetVertex {
    pub id: usize,
    pub name: String,
    pub out_channels: u32,
    pub stride: u32,
    pub kernel: u32,
    pub is_resampler: bool,
    /// Longest-path depth from the network inputs before hop edges.
    pub depth: usize,
}

impl NetVertex {
    /// Activations produced per cycle, in channel units.
    pub fn payload_out(&self) -> u32 {
        self.out_channels
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetEdge {
    pub src: usize,
    pub dst: usize,
    pub flows: Vec<Flow>,
}

impl NetEdge {
    /// Channel units per cycle over this edge.
    pub fn payload(&self) -> u64 {
        self.flows.iter().map(|f| u64::from(f.channels)).sum()
    }

    /// Origin tag of the edge: the origin of the source layer's own output
    /// when it travels here, otherwise that of the first forwarded flow.
    pub fn origin(&self) -> EdgeOrigin {
        self.flows
            .iter()
            .find(|f| f.source == self.src)
            .or_else(|| self.flows.first())
            .map_or(EdgeOrigin::Feedforward, |f| f.origin)
    }
}

/// A complete bipartite concatenation link `K_{m,n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connector {
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
}

impl Connector {
    pub fn shape(&self) -> (usize, usize) {
        (self.sources.len(), self.sinks.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "representation")]
pub enum DenseRepr {
    Complete,
    Path,
    Hybrid { unit_size: usize },
}

/// Consolidated CNN graph. Vertex ids equal temporal indices, so every edge
/// satisfies `src < dst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetGraph {
    pub name: String,
    pub family: Family,
    pub dense_repr: Option<DenseRepr>,
    pub vertices: Vec<NetVertex>,
    pub edges: Vec<NetEdge>,
    pub connectors: Vec<Connector>,
    pub arch: Arc<ArchSpec>,
}

/// Edge accumulator that merges flows of the same source and origin.
#[derive(Clone, Debug, Default)]
pub(crate) struct EdgeSet {
    map: BTreeMap<(usize, usize), Vec<Flow>>,
}

impl EdgeSet {
    pub(crate) fn add(&mut self, src: usize, dst: usize, flow: Flow) {
        let flows = self.map.entry((src, dst)).or_default();
        match flows
            .iter_mut()
            .find(|f| f.source == flow.source && f.origin == flow.origin)
        {
            Some(f) => f.consumers.extend(flow.consumers),
            None => flows.push(flow),
        }
    }

    pub(crate) fn contains(&self, src: usize, dst: usize) -> bool {
        self.map.contains_key(&(src, dst))
    }

    /// Removes flows of `source` consumed only by `consumer` on `src → dst`,
    /// dropping the edge when nothing is left.
    pub(crate) fn remove_source(&mut self, src: usize, dst: usize, source: usize) {
        if let Some(flows) = self.map.get_mut(&(src, dst)) {
            flows.retain(|f| f.source != source);
            if flows.is_empty() {
                self.map.remove(&(src, dst));
            }
        }
    }

    pub(crate) fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.keys().copied()
    }

    pub(crate) fn into_edges(self) -> Vec<NetEdge> {
        self.map
            .into_iter()
            .map(|((src, dst), flows)| NetEdge { src, dst, flows })
            .collect()
    }

    pub(crate) fn from_edges(edges: &[NetEdge]) -> Self {
        EdgeSet {
            map: edges.iter().map(|e| ((e.src, e.dst), e.flows.clone())).collect(),
        }
    }
}

impl NetGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&NetEdge> {
        self.edges
            .binary_search_by(|e| (e.src, e.dst).cmp(&(src, dst)))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<&NetVertex> {
        self.vertices.iter().find(|v| v.name == name)
    }

    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.src == v).map(|e| e.dst)
    }

    pub fn predecessors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.dst == v).map(|e| e.src)
    }

    /// Neighbours in either direction.
    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.successors(v).chain(self.predecessors(v)).collect()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.successors(v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.predecessors(v).count()
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.out_degree(v)).max().unwrap_or(0)
    }

    /// Largest channel depth over all layers.
    pub fn c_max(&self) -> u32 {
        self.vertices.iter().map(|v| v.out_channels).max().unwrap_or(0)
    }

    /// No self-loops, no parallel edges, and ids form a topological order.
    pub fn is_simple_dag(&self) -> bool {
        let n = self.vertex_count();
        self.edges.iter().all(|e| e.src < e.dst && e.dst < n)
            && self
                .edges
                .windows(2)
                .all(|w| (w[0].src, w[0].dst) < (w[1].src, w[1].dst))
            && self.vertices.iter().enumerate().all(|(i, v)| v.id == i)
    }

    /// Each vertex is linked only to its temporal successor.
    pub fn is_path(&self) -> bool {
        self.edges.len() + 1 == self.vertex_count().max(1) && self.edges.iter().all(|e| e.dst == e.src + 1)
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.src, e.dst)).collect()
    }

    /// Forwarded activations are neither created nor destroyed: every
    /// foreign flow leaving a vertex entered it, and every flow entering a
    /// vertex is consumed there or leaves again.
    pub fn check_payload_conservation(&self) -> Result<()> {
        let n = self.vertex_count();
        let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut outgoing: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        let mut consumed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for e in &self.edges {
            for f in &e.flows {
                incoming[e.dst].insert(f.source);
                outgoing[e.src].insert(f.source);
                if f.consumers.contains(&e.dst) {
                    consumed[e.dst].insert(f.source);
                }
            }
        }
        for v in 0..n {
            if let Some(s) = outgoing[v].iter().find(|&&s| s != v && !incoming[v].contains(&s)) {
                return Err(Error::InvalidState(format!(
                    "vertex {v} forwards activations of {s} it never received"
                )));
            }
            if let Some(s) = incoming[v]
                .iter()
                .find(|&&s| !consumed[v].contains(&s) && !outgoing[v].contains(&s))
            {
                return Err(Error::InvalidState(format!(
                    "activations of {s} entering vertex {v} are dropped"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> NetGraphJson {
        NetGraphJson {
            name: self.name.clone(),
            family: self.family,
            dense_repr: self.dense_repr,
            vertices: self
                .vertices
                .iter()
                .map(|v| NetVertexJson {
                    id: v.id,
                    name: v.name.clone(),
                    temporal_index: v.id,
                    out_channels: v.out_channels,
                    payload_out: v.payload_out(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| NetEdgeJson {
                    src: e.src,
                    dst: e.dst,
                    origin: e.origin(),
                    payload: e.payload(),
                    flows: e
                        .flows
                        .iter()
                        .map(|f| FlowJson {
                            source: f.source,
                            channels: f.channels,
                            origin: f.origin,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Graphviz rendering; edge colours follow the origin classes used in
    /// the case-study legend.
    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph \"{}\" {{\n  rankdir=LR;\n  node [shape=box];\n", self.name);
        for v in &self.vertices {
            let _ = writeln!(out, "  {} [label=\"{}\\n{}ch\"];", v.id, v.name, v.out_channels);
        }
        for e in &self.edges {
            let color = edge_color(e.origin(), self.vertices[e.dst].is_resampler);
            let style = if e.origin() == EdgeOrigin::Hop {
                ",style=dashed"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  {} -> {} [color={color}{style},label=\"{}\"];",
                e.src,
                e.dst,
                e.payload()
            );
        }
        out.push_str("}\n");
        out
    }
}

fn edge_color(origin: EdgeOrigin, to_resampler: bool) -> &'static str {
    if to_resampler {
        return "red";
    }
    match origin {
        EdgeOrigin::Feedforward => "green",
        EdgeOrigin::Residual => "blue",
        EdgeOrigin::Resample => "orange",
        EdgeOrigin::Concat => "purple",
        EdgeOrigin::Hop => "gray40",
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetGraphJson {
    pub name: String,
    pub family: Family,
    pub dense_repr: Option<DenseRepr>,
    pub vertices: Vec<NetVertexJson>,
    pub edges: Vec<NetEdgeJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetVertexJson {
    pub id: usize,
    pub name: String,
    pub temporal_index: usize,
    pub out_channels: u32,
    pub payload_out: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetEdgeJson {
    pub src: usize,
    pub dst: usize,
    pub origin: EdgeOrigin,
    pub payload: u64,
    pub flows: Vec<FlowJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowJson {
    pub source: usize,
    pub channels: u32,
    pub origin: EdgeOrigin,
}
