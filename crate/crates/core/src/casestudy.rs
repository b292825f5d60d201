//! Placement of a mapped network on a physical grid of computational-memory
//! cores, with link bandwidth and input-memory estimates.
//!
//! Cores are laid out row by row in fabric construction order, starting at
//! the top left, so core `c` sits at `(c / cols, c % cols)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fabric::Fabric;
use crate::mapper::Mapping;
use crate::metrics::{link, Link};
use crate::netgraph::{EdgeOrigin, NetGraph};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub crossbar_dim: u32,
    pub cycle_ns: f64,
    pub bits_act: u32,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            crossbar_dim: 576,
            cycle_ns: 100.0,
            bits_act: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrowClass {
    FeedforwardGreen,
    ResidualBlue,
    ResampledResidualOrange,
    ToResamplerRed,
}

impl ArrowClass {
    pub fn color(self) -> &'static str {
        match self {
            ArrowClass::FeedforwardGreen => "green",
            ArrowClass::ResidualBlue => "blue",
            ArrowClass::ResampledResidualOrange => "orange",
            ArrowClass::ToResamplerRed => "red",
        }
    }

    /// Flows entering a resampling layer are drawn red whatever their origin.
    pub fn of(origin: EdgeOrigin, to_resampler: bool) -> Self {
        if to_resampler {
            return ArrowClass::ToResamplerRed;
        }
        match origin {
            EdgeOrigin::Residual => ArrowClass::ResidualBlue,
            EdgeOrigin::Resample => ArrowClass::ResampledResidualOrange,
            EdgeOrigin::Feedforward | EdgeOrigin::Concat | EdgeOrigin::Hop => ArrowClass::FeedforwardGreen,
        }
    }
}

/// One physical channel: the activations of `source_layer` moving between
/// two cores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub class: ArrowClass,
    pub edge: (usize, usize),
    pub source_layer: usize,
    pub channels: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorePlacement {
    pub rows: usize,
    pub cols: usize,
    /// Layer name per cell.
    pub grid: Vec<Vec<Option<String>>>,
    /// Cell of every net vertex.
    pub cells: Vec<(usize, usize)>,
    pub arrows: Vec<Arrow>,
    /// Fabric links between cores, in core ids.
    pub links: Vec<Link>,
    /// Core of every net vertex.
    pub cores: Vec<usize>,
    pub params: Option<PhysicalParams>,
}

impl CorePlacement {
    pub fn with_params(mut self, params: PhysicalParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn assigned_cells(&self) -> usize {
        self.grid.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub fn arrow_counts(&self) -> BTreeMap<ArrowClass, usize> {
        let mut out = BTreeMap::new();
        for a in &self.arrows {
            *out.entry(a.class).or_default() += 1;
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("placement serializes")
    }

    pub fn to_svg(&self) -> String {
        const CELL: f64 = 90.0;
        const PAD: f64 = 20.0;
        let w = self.cols as f64 * CELL + 2.0 * PAD;
        let h = self.rows as f64 * CELL + 2.0 * PAD + 40.0;
        let mut out =
            format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif">"#);
        out.push_str("\n<defs>");
        for class in [
            ArrowClass::FeedforwardGreen,
            ArrowClass::ResidualBlue,
            ArrowClass::ResampledResidualOrange,
            ArrowClass::ToResamplerRed,
        ] {
            let c = class.color();
            let _ = write!(
                out,
                r#"<marker id="head-{c}" markerWidth="8" markerHeight="8" refX="7" refY="4" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="{c}"/></marker>"#
            );
        }
        out.push_str("</defs>\n");
        let centre = |(r, c): (usize, usize)| (PAD + (c as f64 + 0.5) * CELL, PAD + (r as f64 + 0.5) * CELL);
        for (r, row) in self.grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let fill = if cell.is_some() { "#f4f4f4" } else { "#ffffff" };
                let _ = writeln!(
                    out,
                    r##"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#555"/>"##,
                    PAD + c as f64 * CELL + 6.0,
                    PAD + r as f64 * CELL + 6.0,
                    CELL - 12.0,
                    CELL - 12.0
                );
                if let Some(name) = cell {
                    let (x, y) = centre((r, c));
                    let _ = writeln!(
                        out,
                        r#"<text x="{x}" y="{}" text-anchor="middle" font-size="10">{name}</text>"#,
                        y - 18.0
                    );
                }
            }
        }
        // parallel arrows between the same cells are spread apart
        let mut seen: BTreeMap<_, usize> = BTreeMap::new();
        for a in &self.arrows {
            let k = seen.entry((a.from, a.to)).or_default();
            let offset = *k as f64 * 6.0 - 6.0;
            *k += 1;
            let (x1, y1) = centre(a.from);
            let (x2, y2) = centre(a.to);
            let (dx, dy) = (x2 - x1, y2 - y1);
            let len = (dx * dx + dy * dy).sqrt().max(1.0);
            let (nx, ny) = (-dy / len * offset, dx / len * offset);
            let shrink = 22.0 / len;
            let c = a.class.color();
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{c}" stroke-width="2" marker-end="url(#head-{c})"/>"#,
                x1 + dx * shrink + nx,
                y1 + dy * shrink + ny,
                x2 - dx * shrink + nx,
                y2 - dy * shrink + ny
            );
        }
        let legend = [
            (ArrowClass::FeedforwardGreen, "feedforward"),
            (ArrowClass::ResidualBlue, "residual"),
            (ArrowClass::ResampledResidualOrange, "resampled residual"),
            (ArrowClass::ToResamplerRed, "to resampler"),
        ];
        for (i, (class, label)) in legend.iter().enumerate() {
            let x = PAD + 150.0 * i as f64;
            let y = h - 20.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{}" y="{}" font-size="11">{label}</text>"#,
                x + 24.0,
                class.color(),
                x + 30.0,
                y + 4.0
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Lays the mapped cores out row-wise and derives one arrow per physical
/// channel of every routed edge.
pub fn place_on_grid(
    net: &NetGraph,
    fabric: &Fabric,
    mapping: &Mapping,
    rows: usize,
    cols: usize,
) -> Result<CorePlacement> {
    let cells_available = rows * cols;
    if rows == 0 || cols == 0 || cells_available < net.vertex_count() {
        return Err(invalid(format!(
            "grid too small: {rows}x{cols} has {cells_available} cores, {} needs {}",
            net.name,
            net.vertex_count()
        )));
    }
    if mapping.assignment.len() != net.vertex_count() || mapping.routes.len() != net.edge_count() {
        return Err(Error::InvalidState("mapping is not routed".into()));
    }
    if let Some(&c) = mapping.assignment.iter().find(|&&c| c >= cells_available) {
        return Err(invalid(format!("grid too small: core {c} lies outside {rows}x{cols}")));
    }
    let cell = |c: usize| (c / cols, c % cols);
    let mut grid = vec![vec![None; cols]; rows];
    let cells: Vec<(usize, usize)> = mapping.assignment.iter().map(|&c| cell(c)).collect();
    for (v, &(r, c)) in cells.iter().enumerate() {
        grid[r][c] = Some(net.vertices[v].name.clone());
    }
    let mut arrows = Vec::new();
    for (route, e) in mapping.routes.iter().zip(&net.edges) {
        let to_resampler = net.vertices[e.dst].is_resampler;
        for f in &e.flows {
            arrows.push(Arrow {
                from: cell(route.path[0]),
                to: cell(*route.path.last().unwrap_or(&route.path[0])),
                class: ArrowClass::of(f.origin, to_resampler),
                edge: (e.src, e.dst),
                source_layer: f.source,
                channels: f.channels,
            });
        }
    }
    Ok(CorePlacement {
        rows,
        cols,
        grid,
        cells,
        arrows,
        links: fabric.graph().edges(),
        cores: mapping.assignment.clone(),
        params: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreMemory {
    pub layer: String,
    pub kernel: u32,
    pub in_channels: u32,
    pub out_channels: u32,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalEstimate {
    /// Busiest physical channel on every fabric link; 0 for unused links.
    pub per_link_gbps: BTreeMap<String, f64>,
    /// Bandwidth of every arrow, in arrow order.
    pub per_channel_gbps: Vec<f64>,
    pub max_gbps: f64,
    pub per_core_input_memory: Vec<CoreMemory>,
    pub warnings: Vec<String>,
}

/// Channels feeding the convolution of `v`. Residual additions happen after
/// the convolution and are not part of its input window, except on a
/// resampling layer whose only input is the residual itself. Network inputs
/// are taken as three-channel images.
fn conv_in_channels(net: &NetGraph, v: usize) -> u32 {
    let is_res = net.vertices[v].is_resampler;
    let c: u32 = net
        .edges
        .iter()
        .filter(|e| e.dst == v)
        .flat_map(|e| e.flows.iter())
        .filter(|f| f.consumers.contains(&v))
        .filter(|f| is_res || !matches!(f.origin, EdgeOrigin::Residual | EdgeOrigin::Resample))
        .map(|f| f.channels)
        .sum();
    if c == 0 {
        3
    } else {
        c
    }
}

pub fn estimate_physical(placement: &CorePlacement, net: &NetGraph) -> Result<PhysicalEstimate> {
    let p = placement
        .params
        .ok_or_else(|| Error::InvalidState("placement has no physical parameters".into()))?;
    if p.cycle_ns <= 0.0 {
        return Err(invalid("cycle time must be positive"));
    }
    let gbps = |channels: u32| f64::from(channels) * f64::from(p.bits_act) / p.cycle_ns;
    let per_channel: Vec<f64> = placement.arrows.iter().map(|a| gbps(a.channels)).collect();
    let mut per_link: BTreeMap<Link, f64> = placement.links.iter().map(|&l| (l, 0.0)).collect();
    for a in &placement.arrows {
        let (u, v) = (placement.cores[a.edge.0], placement.cores[a.edge.1]);
        let slot = per_link.entry(link(u, v)).or_insert(0.0);
        *slot = slot.max(gbps(a.channels));
    }
    let max_gbps = per_channel.iter().copied().fold(0.0, f64::max);
    let mut memory = Vec::with_capacity(net.vertex_count());
    let mut warnings = Vec::new();
    for v in &net.vertices {
        let cin = conv_in_channels(net, v.id);
        let rows = v.kernel * v.kernel * cin;
        if rows > p.crossbar_dim {
            warnings.push(format!(
                "{}: {}x{}x{} = {rows} crossbar rows exceed {}",
                v.name, v.kernel, v.kernel, cin, p.crossbar_dim
            ));
        }
        if v.out_channels > p.crossbar_dim {
            warnings.push(format!(
                "{}: {} output channels exceed {} crossbar columns",
                v.name, v.out_channels, p.crossbar_dim
            ));
        }
        memory.push(CoreMemory {
            layer: v.name.clone(),
            kernel: v.kernel,
            in_channels: cin,
            out_channels: v.out_channels,
            bytes: u64::from(rows) * u64::from(p.bits_act) / 8,
        });
    }
    Ok(PhysicalEstimate {
        per_link_gbps: per_link
            .into_iter()
            .map(|((u, v), g)| (format!("{u}-{v}"), g))
            .collect(),
        per_channel_gbps: per_channel,
        max_gbps,
        per_core_input_memory: memory,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabric::build_kpp;
    use crate::mapper::{h_color, Strategy, DEFAULT_BUDGET};
    use crate::netgraph::{consolidate, gen_feedforward, gen_resnet};

    fn resnet32() -> (NetGraph, Fabric, Mapping) {
        let net = consolidate(&gen_resnet(32).unwrap()).unwrap();
        let f = build_kpp(6, 40).unwrap();
        let m = h_color(&net, &f, Strategy::Auto, DEFAULT_BUDGET).unwrap().unwrap();
        (net, f, m)
    }

    #[test]
    fn resnet32_on_four_by_ten() {
        let (net, f, m) = resnet32();
        let p = place_on_grid(&net, &f, &m, 4, 10).unwrap();
        assert_eq!(p.assigned_cells(), 33);
        assert_eq!(p.arrow_counts()[&ArrowClass::ResampledResidualOrange], 2);
        assert_eq!(p.arrow_counts()[&ArrowClass::ToResamplerRed], 2);
        let est = estimate_physical(&p.clone().with_params(PhysicalParams::default()), &net).unwrap();
        assert!((est.max_gbps - 5.12).abs() < 1e-9);
        assert!(est.warnings.is_empty(), "{:?}", est.warnings);
        assert!(est.per_link_gbps.values().any(|&g| g == 0.0));
        assert!(matches!(estimate_physical(&p, &net), Err(Error::InvalidState(_))));
        assert!(place_on_grid(&net, &f, &m, 2, 10).is_err());
    }

    #[test]
    fn sixteen_channel_link() {
        let net = consolidate(&gen_feedforward(2, 16).unwrap()).unwrap();
        let f = build_kpp(6, 6).unwrap();
        let m = h_color(&net, &f, Strategy::Auto, DEFAULT_BUDGET).unwrap().unwrap();
        let p = place_on_grid(&net, &f, &m, 1, 6)
            .unwrap()
            .with_params(PhysicalParams::default());
        let est = estimate_physical(&p, &net).unwrap();
        assert!((est.max_gbps - 1.28).abs() < 1e-9);
    }

    #[test]
    fn single_layer_grid() {
        let net = consolidate(&gen_feedforward(1, 16).unwrap()).unwrap();
        let f = Fabric::custom(crate::graph::UGraph::with_vertices(1)).unwrap();
        let m = crate::mapper::route_edges(&net, &f, &[0], Strategy::Path).unwrap();
        let p = place_on_grid(&net, &f, &m, 1, 1).unwrap();
        assert_eq!(p.assigned_cells(), 1);
        assert!(p.arrows.is_empty());
    }
}
