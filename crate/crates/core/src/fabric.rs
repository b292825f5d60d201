//! Communication fabrics: unit complete graphs, k-Parallel-Prism chains and
//! 2D-mesh baselines.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::UGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FabricKind {
    Kpp { unit_size: usize },
    Mesh { rows: usize, cols: usize },
    Custom,
}

/// Rows × cols of a 2D mesh, stored with `rows <= cols`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshShape {
    rows: usize,
    cols: usize,
}

impl MeshShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("mesh dimensions must be positive, got {rows}x{cols}")));
        }
        Ok(MeshShape {
            rows: rows.min(cols),
            cols: rows.max(cols),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cores(&self) -> usize {
        self.rows * self.cols
    }
}

/// An undirected, simple, connected graph of cores and bidirectional links.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fabric {
    graph: UGraph,
    kind: FabricKind,
    prism_count: Option<usize>,
    units: Vec<Vec<usize>>,
    labels: Vec<String>,
    rail: Vec<usize>,
}

impl Fabric {
    /// Wraps an arbitrary dense, simple, connected graph.
    pub fn custom(graph: UGraph) -> Result<Self> {
        let n = graph.vertex_count();
        if graph.vertices().enumerate().any(|(i, v)| i != v) {
            return Err(invalid("custom fabric vertices must be numbered 0..n"));
        }
        if !graph.is_simple() || !graph.is_connected() {
            return Err(invalid("custom fabric must be simple and connected"));
        }
        Ok(Fabric {
            graph,
            kind: FabricKind::Custom,
            prism_count: None,
            units: Vec::new(),
            labels: (0..n).map(|v| format!("v{v}")).collect(),
            rail: (0..n).collect(),
        })
    }

    pub fn graph(&self) -> &UGraph {
        &self.graph
    }

    pub fn kind(&self) -> FabricKind {
        self.kind
    }

    pub fn unit_size(&self) -> Option<usize> {
        match self.kind {
            FabricKind::Kpp { unit_size } => Some(unit_size),
            _ => None,
        }
    }

    pub fn prism_count(&self) -> Option<usize> {
        self.prism_count
    }

    /// Vertex sets of the unit graphs (kPP only).
    pub fn units(&self) -> &[Vec<usize>] {
        &self.units
    }

    /// Display label of a core, e.g. `a3` or `(1,4)`.
    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    /// Order in which iterative colorings walk the fabric: construction
    /// order for kPP, serpentine rows for meshes.
    pub fn rail_order(&self) -> &[usize] {
        &self.rail
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn has_link(&self, u: usize, v: usize) -> bool {
        self.graph.has_edge(u, v)
    }

    /// Short descriptor such as `5PP(40)` or `mesh 4x10`.
    pub fn descriptor(&self) -> String {
        match self.kind {
            FabricKind::Kpp { unit_size } => format!("{}PP({})", unit_size - 1, self.vertex_count()),
            FabricKind::Mesh { rows, cols } => format!("mesh {rows}x{cols}"),
            FabricKind::Custom => format!("custom({})", self.vertex_count()),
        }
    }

    /// Every vertex lies in some recorded unit whose induced subgraph is
    /// complete.
    pub fn satisfies_unit_cover(&self) -> bool {
        (0..self.vertex_count()).all(|v| self.units.iter().any(|u| u.contains(&v) && self.graph.is_clique(u)))
    }

    pub fn to_json(&self) -> FabricJson {
        let (unit_size, rows, cols) = match self.kind {
            FabricKind::Kpp { unit_size } => (Some(unit_size), None, None),
            FabricKind::Mesh { rows, cols } => (None, Some(rows), Some(cols)),
            FabricKind::Custom => (None, None, None),
        };
        FabricJson {
            kind: match self.kind {
                FabricKind::Kpp { .. } => "kpp",
                FabricKind::Mesh { .. } => "mesh",
                FabricKind::Custom => "custom",
            }
            .to_string(),
            unit_size,
            prism_count: self.prism_count,
            rows,
            cols,
            vertices: (0..self.vertex_count()).collect(),
            edges: self.graph.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            units: self.units.clone(),
        }
    }

    /// Rebuilds a fabric from its JSON form. kPP and mesh fabrics are
    /// reconstructed from their parameters and checked against the stored
    /// edge list.
    pub fn from_json(json: &FabricJson) -> Result<Self> {
        let fabric = match json.kind.as_str() {
            "kpp" => {
                let unit = json.unit_size.ok_or_else(|| invalid("kpp fabric without unit_size"))?;
                build_kpp(unit, json.vertices.len())?
            }
            "mesh" => {
                let rows = json.rows.ok_or_else(|| invalid("mesh fabric without rows"))?;
                let cols = json.cols.ok_or_else(|| invalid("mesh fabric without cols"))?;
                build_mesh(MeshShape::new(rows, cols)?)
            }
            "custom" => {
                let edges: Vec<(usize, usize)> = json.edges.iter().map(|e| (e[0], e[1])).collect();
                return Fabric::custom(UGraph::from_edges(json.vertices.len(), &edges));
            }
            other => return Err(invalid(format!("unknown fabric kind `{other}`"))),
        };
        let stored: Vec<(usize, usize)> = json.edges.iter().map(|e| (e[0].min(e[1]), e[0].max(e[1]))).collect();
        let mut stored = stored;
        stored.sort_unstable();
        if stored != fabric.graph.edges() {
            return Err(invalid("edge list does not match the fabric parameters"));
        }
        Ok(fabric)
    }

    /// Graphviz rendering. kPP vertices are grouped into one cluster per
    /// unit graph, each vertex drawn in the first unit that contains it.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph fabric {\n  node [shape=box];\n");
        let mut placed = vec![false; self.vertex_count()];
        for (j, unit) in self.units.iter().enumerate() {
            let fresh: Vec<usize> = unit.iter().copied().filter(|&v| !placed[v]).collect();
            if fresh.is_empty() {
                continue;
            }
            let _ = writeln!(out, "  subgraph cluster_unit{j} {{\n    label=\"unit {}\";", j + 1);
            for v in fresh {
                placed[v] = true;
                let _ = writeln!(out, "    {v} [label=\"{}\"];", self.labels[v]);
            }
            out.push_str("  }\n");
        }
        for (v, label) in self.labels.iter().enumerate() {
            if !placed[v] {
                let _ = writeln!(out, "  {v} [label=\"{label}\"];");
            }
        }
        for (u, v) in self.graph.edges() {
            let _ = writeln!(out, "  {u} -- {v};");
        }
        out.push_str("}\n");
        out
    }
}

/// Serialized fabric. Edge pairs are stored with `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FabricJson {
    pub kind: String,
    pub unit_size: Option<usize>,
    pub prism_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub units: Vec<Vec<usize>>,
}

/// Complete graph `K_n`.
pub fn unit_complete_graph(n: usize) -> Result<Fabric> {
    if n < 2 {
        return Err(invalid(format!("unit graph needs at least 2 vertices, got {n}")));
    }
    let mut g = UGraph::with_vertices(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v);
        }
    }
    let mut f = Fabric::custom(g)?;
    f.units = vec![(0..n).collect()];
    Ok(f)
}

/// Number of unit graphs chained to reach at least `num_cores` vertices.
pub fn prism_count(unit_size: usize, num_cores: usize) -> usize {
    (num_cores.saturating_sub(unit_size)).div_ceil(2) + 1
}

/// Builds a k-Parallel-Prism fabric (k = `unit_size` − 1) with at least
/// `num_cores` cores.
///
/// Starts from the disjoint union of `M` copies of `K_unit_size`; unit
/// `j + 1` is glued onto unit `j` by identifying its first `unit_size − 2`
/// vertices with the last `unit_size − 2` vertices of unit `j`, so every new
/// unit contributes two fresh cores. Core ids follow the rail order
/// `a1, b1, a2, b2, …` and finish with the tail of the last unit.
pub fn build_kpp(unit_size: usize, num_cores: usize) -> Result<Fabric> {
    if unit_size < 4 || !unit_size.is_multiple_of(2) {
        return Err(invalid(format!("kPP unit size must be even and >= 4, got {unit_size}")));
    }
    if num_cores < unit_size {
        return Err(invalid(format!(
            "kPP needs at least {unit_size} cores, got {num_cores}"
        )));
    }
    let m = prism_count(unit_size, num_cores);
    let unit = unit_complete_graph(unit_size)?;

    let mut g = UGraph::new();
    for j in 0..m {
        g.absorb(unit.graph(), j * unit_size)?;
    }

    let mut current: Vec<usize> = (0..unit_size).collect();
    let mut rail = Vec::with_capacity(2 * m + unit_size);
    for j in 1..m {
        let base = j * unit_size;
        for k in 0..unit_size - 2 {
            g.merge_into(current[k + 2], base + k)?;
        }
        rail.extend_from_slice(&current[..2]);
        let mut next: Vec<usize> = current[2..].to_vec();
        next.push(base + unit_size - 2);
        next.push(base + unit_size - 1);
        current = next;
    }
    rail.extend_from_slice(&current);

    let graph = g.compact(&rail)?;
    let n = graph.vertex_count();
    let units = (0..m).map(|j| (2 * j..2 * j + unit_size).collect()).collect();
    let mut labels = Vec::with_capacity(n);
    for v in 0..n {
        let label = if v < 2 * (m - 1) {
            format!("{}{}", if v % 2 == 0 { 'a' } else { 'b' }, v / 2 + 1)
        } else {
            let k = v - 2 * (m - 1);
            format!("{}{}", (b'a' + k as u8) as char, m)
        };
        labels.push(label);
    }
    Ok(Fabric {
        graph,
        kind: FabricKind::Kpp { unit_size },
        prism_count: Some(m),
        units,
        labels,
        rail: (0..n).collect(),
    })
}

/// Adjacency of rail positions `i` and `j` in a kPP built on `K_unit_size`,
/// without materialising the fabric.
pub fn kpp_rail_adjacent(unit_size: usize, i: usize, j: usize) -> bool {
    let (lo, hi) = (i.min(j), i.max(j));
    let gap = hi - lo;
    gap >= 1 && (gap + 2 <= unit_size || (gap + 1 == unit_size && lo % 2 == 0))
}

/// 4-neighbour grid. Core `(r, c)` has id `r * cols + c`.
pub fn build_mesh(shape: MeshShape) -> Fabric {
    let (rows, cols) = (shape.rows, shape.cols);
    let mut g = UGraph::with_vertices(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                g.add_edge(v, v + 1);
            }
            if r + 1 < rows {
                g.add_edge(v, v + cols);
            }
        }
    }
    let rail = (0..rows)
        .flat_map(|r| {
            let row: Vec<usize> = (0..cols).map(|c| r * cols + c).collect();
            if r % 2 == 0 {
                row
            } else {
                row.into_iter().rev().collect()
            }
        })
        .collect();
    Fabric {
        graph: g,
        kind: FabricKind::Mesh { rows, cols },
        prism_count: None,
        units: Vec::new(),
        labels: (0..rows * cols)
            .map(|v| format!("({},{})", v / cols, v % cols))
            .collect(),
        rail,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FabricStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub min_degree: usize,
    pub max_degree: usize,
    pub diameter: usize,
}

pub fn fabric_stats(f: &Fabric) -> FabricStats {
    let g = f.graph();
    let mut hist = BTreeMap::new();
    for v in g.vertices() {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    let diameter = (0..f.vertex_count())
        .map(|s| g.bfs_distances(s).into_iter().flatten().max().unwrap_or(0))
        .max()
        .unwrap_or(0);
    FabricStats {
        vertex_count: g.vertex_count(),
        edge_count: g.edge_count(),
        min_degree: hist.keys().next().copied().unwrap_or(0),
        max_degree: hist.keys().next_back().copied().unwrap_or(0),
        degree_histogram: hist,
        diameter,
    }
}

/// Parses fabric descriptors used on the command line:
/// `kpp<unit>:<cores>`, `kpp<unit>:auto` (sized by `auto_cores`),
/// `mesh:<rows>x<cols>`.
pub fn parse_fabric_descriptor(desc: &str, auto_cores: usize) -> Result<Fabric> {
    let bad = || invalid(format!("malformed fabric descriptor `{desc}`"));
    let (head, tail) = desc.split_once(':').ok_or_else(bad)?;
    if head == "mesh" {
        if tail == "auto" {
            let n = auto_cores.max(1);
            let rows = (1..=n).take_while(|r| r * r <= n).last().unwrap_or(1);
            return Ok(build_mesh(MeshShape::new(rows, n.div_ceil(rows))?));
        }
        let (r, c) = tail.split_once('x').ok_or_else(bad)?;
        let rows = r.parse().map_err(|_| bad())?;
        let cols = c.parse().map_err(|_| bad())?;
        return Ok(build_mesh(MeshShape::new(rows, cols)?));
    }
    let unit: usize = head.strip_prefix("kpp").ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let cores = if tail == "auto" {
        auto_cores.max(unit)
    } else {
        tail.parse().map_err(|_| bad())?
    };
    build_kpp(unit, cores)
}

impl std::str::FromStr for MeshShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (r, c) = s
            .split_once('x')
            .ok_or_else(|| invalid(format!("expected <rows>x<cols>, got `{s}`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("bad mesh size `{s}`")))
        };
        MeshShape::new(parse(r)?, parse(c)?)
    }
}
