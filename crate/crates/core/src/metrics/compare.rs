//! Cross-product of networks and fabric families.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{link_bandwidth, MetricsReport, MetricsReportJson, RatioJson};
use crate::error::{invalid, Result};
use crate::fabric::{build_kpp, build_mesh, Fabric, MeshShape};
use crate::mapper::{place_and_route, Strategy, DEFAULT_BUDGET};
use crate::netgraph::{
    alexnet, consolidate, gen_densenet_with, gen_inception, gen_resnet, DenseConfig, DenseRepr, InceptionVersion,
    NetGraph,
};

/// A network whose graph may depend on the fabric it is mapped onto.
#[derive(Clone, Debug)]
pub enum NetworkSource {
    Fixed(NetGraph),
    /// Dense network: hybrid representation sized to the unit graph on
    /// prism fabrics, path representation on meshes.
    Dense {
        name: String,
        block_sizes: Vec<usize>,
        config: DenseConfig,
    },
}

impl NetworkSource {
    pub fn name(&self) -> &str {
        match self {
            NetworkSource::Fixed(g) => &g.name,
            NetworkSource::Dense { name, .. } => name,
        }
    }

    pub fn instantiate(&self, group: FabricGroup) -> Result<NetGraph> {
        match self {
            NetworkSource::Fixed(g) => Ok(g.clone()),
            NetworkSource::Dense {
                name,
                block_sizes,
                config,
            } => {
                let repr = match group {
                    FabricGroup::Kpp { unit_size } => DenseRepr::Hybrid { unit_size },
                    FabricGroup::Mesh => DenseRepr::Path,
                };
                let (_, mut g) = gen_densenet_with(block_sizes, repr, *config)?;
                g.name.clone_from(name);
                Ok(g)
            }
        }
    }

    /// AlexNet, ResNet-32, DenseNet-201 and Inception v4.
    pub fn study_networks() -> Result<Vec<NetworkSource>> {
        Ok(vec![
            NetworkSource::Fixed(consolidate(&alexnet())?),
            NetworkSource::Fixed(consolidate(&gen_resnet(32)?)?),
            NetworkSource::Dense {
                name: "densenet201".into(),
                block_sizes: vec![6, 12, 48, 32],
                config: DenseConfig::default(),
            },
            NetworkSource::Fixed(consolidate(&gen_inception(InceptionVersion::V4)?)?),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FabricGroup {
    Kpp { unit_size: usize },
    Mesh,
}

impl fmt::Display for FabricGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FabricGroup::Kpp { unit_size } => write!(f, "{}PP", unit_size - 1),
            FabricGroup::Mesh => f.write_str("mesh"),
        }
    }
}

/// Mesh aspect ratios tried for an `n`-vertex network: a line, two rows,
/// four rows and the most square grid that fits.
pub fn mesh_aspects(n: usize) -> Vec<(MeshAspect, MeshShape)> {
    let n = n.max(1);
    let r = (1..=n).take_while(|r| r * r <= n).last().unwrap_or(1);
    let shapes = [
        (MeshAspect::Line, 1, n),
        (MeshAspect::TwoRows, 2.min(n), n.div_ceil(2)),
        (MeshAspect::FourRows, 4.min(n), n.div_ceil(4)),
        (MeshAspect::Square, r, n.div_ceil(r)),
    ];
    shapes
        .into_iter()
        .filter_map(|(a, rows, cols)| MeshShape::new(rows, cols).ok().map(|s| (a, s)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshAspect {
    Line,
    TwoRows,
    FourRows,
    Square,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyParams {
    pub bits_act: u32,
    pub cycle_ns: f64,
    pub budget: u64,
}

impl Default for StudyParams {
    fn default() -> Self {
        StudyParams {
            bits_act: 8,
            cycle_ns: 100.0,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub network: String,
    pub group: FabricGroup,
    pub fabric: String,
    pub aspect: Option<MeshAspect>,
    pub strategy: Option<Strategy>,
    pub is_homomorphism: bool,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub networks: Vec<String>,
    pub groups: Vec<FabricGroup>,
    pub rows: Vec<ComparisonRow>,
    pub params: StudyParams,
}

/// Ratios `other / reference` per network; for meshes the best aspect per
/// metric (latency, bandwidth) and the best overall aspect for link counts.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupRatio {
    pub group: FabricGroup,
    pub latency: BTreeMap<String, Ratio<u64>>,
    pub bandwidth: BTreeMap<String, Ratio<u64>>,
    /// Total fabric links of `group` over those of the reference, summed over
    /// networks.
    pub links: Option<Ratio<u64>>,
    pub best_mesh_aspect: Option<MeshAspect>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSummary {
    pub reference: FabricGroup,
    pub ratios: Vec<GroupRatio>,
}

impl ComparisonSummary {
    pub fn group(&self, g: FabricGroup) -> Option<&GroupRatio> {
        self.ratios.iter().find(|r| r.group == g)
    }

    /// Largest latency ratio over every network and group.
    pub fn best_latency_improvement(&self) -> Option<(String, FabricGroup, Ratio<u64>)> {
        self.ratios
            .iter()
            .flat_map(|g| g.latency.iter().map(move |(n, &r)| (n.clone(), g.group, r)))
            .max_by_key(|(_, _, r)| *r)
    }
}

impl ComparisonTable {
    fn reports(&self, network: &str, group: FabricGroup) -> impl Iterator<Item = &ComparisonRow> {
        let network = network.to_string();
        self.rows
            .iter()
            .filter(move |r| r.network == network && r.group == group && r.report.is_some())
    }

    pub fn best_latency(&self, network: &str, group: FabricGroup) -> Option<usize> {
        self.reports(network, group)
            .filter_map(|r| r.report.as_ref())
            .map(|r| r.stage_latency_cycles)
            .min()
    }

    pub fn best_bandwidth(&self, network: &str, group: FabricGroup) -> Option<Ratio<u64>> {
        self.reports(network, group)
            .filter_map(|r| r.report.as_ref())
            .map(|r| r.max_link_bandwidth_norm)
            .min()
    }

    pub fn row(&self, network: &str, group: FabricGroup, aspect: Option<MeshAspect>) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.network == network && r.group == group && r.aspect == aspect)
    }

    /// Aspect with the lowest summed latency over all networks, then the
    /// lowest summed bandwidth, then the squarest.
    pub fn best_mesh_aspect(&self) -> Option<MeshAspect> {
        let aspects = [
            MeshAspect::Square,
            MeshAspect::FourRows,
            MeshAspect::TwoRows,
            MeshAspect::Line,
        ];
        aspects
            .into_iter()
            .enumerate()
            .filter_map(|(rank, a)| {
                let mut lat = 0;
                let mut bw = Ratio::from_integer(0);
                for n in &self.networks {
                    let r = self.row(n, FabricGroup::Mesh, Some(a))?.report.as_ref()?;
                    lat += r.stage_latency_cycles;
                    bw += r.max_link_bandwidth_norm;
                }
                Some(((lat, bw, rank), a))
            })
            .min_by(|x, y| x.0.cmp(&y.0))
            .map(|(_, a)| a)
    }

    fn links(&self, network: &str, group: FabricGroup, aspect: Option<MeshAspect>) -> Option<u64> {
        Some(self.row(network, group, aspect)?.report.as_ref()?.total_fabric_links as u64)
    }

    pub fn summary(&self, reference: FabricGroup) -> ComparisonSummary {
        let best_aspect = self.best_mesh_aspect();
        let mut ratios = Vec::new();
        for &g in self.groups.iter().filter(|&&g| g != reference) {
            let mut latency = BTreeMap::new();
            let mut bandwidth = BTreeMap::new();
            let (mut other_links, mut ref_links) = (0, 0);
            let mut links_complete = true;
            for n in &self.networks {
                if let (Some(o), Some(r)) = (self.best_latency(n, g), self.best_latency(n, reference)) {
                    latency.insert(n.clone(), Ratio::new(o as u64, r as u64));
                }
                if let (Some(o), Some(r)) = (self.best_bandwidth(n, g), self.best_bandwidth(n, reference)) {
                    if *r.numer() > 0 {
                        bandwidth.insert(n.clone(), o / r);
                    }
                }
                let aspect = if g == FabricGroup::Mesh { best_aspect } else { None };
                match (self.links(n, g, aspect), self.links(n, reference, None)) {
                    (Some(o), Some(r)) => {
                        other_links += o;
                        ref_links += r;
                    }
                    _ => links_complete = false,
                }
            }
            ratios.push(GroupRatio {
                group: g,
                latency,
                bandwidth,
                links: (links_complete && ref_links > 0).then(|| Ratio::new(other_links, ref_links)),
                best_mesh_aspect: if g == FabricGroup::Mesh { best_aspect } else { None },
            });
        }
        ComparisonSummary { reference, ratios }
    }

    pub fn to_json(&self, reference: FabricGroup) -> ComparisonJson {
        let summary = self.summary(reference);
        ComparisonJson {
            params: self.params,
            rows: self
                .rows
                .iter()
                .map(|r| ComparisonRowJson {
                    network: r.network.clone(),
                    group: r.group.to_string(),
                    fabric: r.fabric.clone(),
                    aspect: r.aspect,
                    strategy: r.strategy,
                    is_homomorphism: r.is_homomorphism,
                    report: r.report.as_ref().map(MetricsReport::to_json),
                    error: r.error.clone(),
                })
                .collect(),
            reference: reference.to_string(),
            ratios: summary
                .ratios
                .iter()
                .map(|g| GroupRatioJson {
                    group: g.group.to_string(),
                    latency: g.latency.iter().map(|(k, &v)| (k.clone(), v.into())).collect(),
                    bandwidth: g.bandwidth.iter().map(|(k, &v)| (k.clone(), v.into())).collect(),
                    links: g.links.map(RatioJson::from),
                    best_mesh_aspect: g.best_mesh_aspect,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonJson {
    pub params: StudyParams,
    pub rows: Vec<ComparisonRowJson>,
    pub reference: String,
    pub ratios: Vec<GroupRatioJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRowJson {
    pub network: String,
    pub group: String,
    pub fabric: String,
    pub aspect: Option<MeshAspect>,
    pub strategy: Option<Strategy>,
    pub is_homomorphism: bool,
    pub report: Option<MetricsReportJson>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRatioJson {
    pub group: String,
    pub latency: BTreeMap<String, RatioJson>,
    pub bandwidth: BTreeMap<String, RatioJson>,
    pub links: Option<RatioJson>,
    pub best_mesh_aspect: Option<MeshAspect>,
}

struct Cell {
    net: usize,
    group: FabricGroup,
    aspect: Option<MeshAspect>,
    fabric: Result<Fabric>,
}

/// Maps every network onto every fabric family, each fabric sized to the
/// network. Mapping failures are kept in their row.
pub fn compare(networks: &[NetworkSource], groups: &[FabricGroup], params: StudyParams) -> Result<ComparisonTable> {
    if networks.is_empty() || groups.is_empty() {
        return Err(invalid("compare needs at least one network and one fabric family"));
    }
    let mut instances: BTreeMap<(usize, FabricGroup), NetGraph> = BTreeMap::new();
    for (i, n) in networks.iter().enumerate() {
        for &g in groups {
            instances.insert((i, g), n.instantiate(g)?);
        }
    }
    let mut cells = Vec::new();
    for (i, _) in networks.iter().enumerate() {
        for &g in groups {
            let v = instances[&(i, g)].vertex_count();
            match g {
                FabricGroup::Kpp { unit_size } => cells.push(Cell {
                    net: i,
                    group: g,
                    aspect: None,
                    fabric: build_kpp(unit_size, v.max(unit_size)),
                }),
                FabricGroup::Mesh => cells.extend(mesh_aspects(v).into_iter().map(|(a, s)| Cell {
                    net: i,
                    group: g,
                    aspect: Some(a),
                    fabric: Ok(build_mesh(s)),
                })),
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|c| {
            let net = &instances[&(c.net, c.group)];
            let mut row = ComparisonRow {
                network: net.name.clone(),
                group: c.group,
                fabric: String::new(),
                aspect: c.aspect,
                strategy: None,
                is_homomorphism: false,
                report: None,
                error: None,
            };
            let result = c.fabric.as_ref().map_err(Clone::clone).and_then(|f| {
                row.fabric = f.descriptor();
                let m = place_and_route(net, f, Strategy::Auto, params.budget)?;
                let report = link_bandwidth(net, f, &m, net.c_max())?;
                Ok((m, report))
            });
            match result {
                Ok((m, report)) => {
                    row.strategy = Some(m.strategy_used);
                    row.is_homomorphism = m.is_homomorphism;
                    row.report = Some(report);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(ComparisonTable {
        networks: networks.iter().map(|n| n.name().to_string()).collect(),
        groups: groups.to_vec(),
        rows,
        params,
    })
}
